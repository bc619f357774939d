from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from src.reward_dsl.ast_nodes import Call, Name, RewardProgram, iter_nodes
from src.reward_dsl.catalog import RewardConstraints

# name -> (minimum, maximum) argument count; None means variadic
FUNCTION_ARITY: Dict[str, Tuple[int, Optional[int]]] = {
    "abs": (1, 1),
    "sqrt": (1, 1),
    "exp": (1, 1),
    "log": (1, 1),
    "clamp": (3, 3),
    "min": (1, None),
    "max": (1, None),
    "mean": (1, None),
    "std": (1, None),
}


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    module: str
    identifier: str = ""
    line: int = 0
    column: int = 0

    def __str__(self) -> str:
        return f"[{self.code}] module {self.module}, line {self.line}: {self.message}"


def _arity_message(func: str, given: int) -> Optional[str]:
    low, high = FUNCTION_ARITY[func]
    if low == high and given != low:
        noun = "argument" if low == 1 else "arguments"
        return f"{func} expects {low} {noun}, got {given}"
    if given < low:
        return f"{func} expects at least {low} argument, got {given}"
    if high is not None and given > high:
        return f"{func} expects at most {high} arguments, got {given}"
    return None


def validate(program: RewardProgram, constraints: RewardConstraints) -> List[Diagnostic]:
    """
    Statically checks a program against the catalog.

    Args:
        program: Parsed program.
        constraints: Catalog and output range.

    Returns:
        List[Diagnostic]: Empty iff every identifier resolves, every call names a
        built-in with a valid argument count, and module names are unique.
    """
    known = set(constraints.catalog.names())
    diagnostics: List[Diagnostic] = []
    seen_modules = set()

    for module in program.modules:
        if module.name in seen_modules:
            diagnostics.append(
                Diagnostic(
                    "duplicate-module",
                    f"module name {module.name!r} is used more than once",
                    module.name,
                    module.name,
                    module.line,
                )
            )
        seen_modules.add(module.name)

        for node in iter_nodes(module.body):
            if isinstance(node, Name) and node.name not in known:
                diagnostics.append(
                    Diagnostic(
                        "unknown-identifier",
                        f"unknown identifier {node.name!r}",
                        module.name,
                        node.name,
                        node.line,
                        node.column,
                    )
                )
            elif isinstance(node, Call):
                if node.func not in FUNCTION_ARITY:
                    diagnostics.append(
                        Diagnostic(
                            "unknown-function",
                            f"unknown function {node.func!r}; available: "
                            + ", ".join(sorted(FUNCTION_ARITY)),
                            module.name,
                            node.func,
                            node.line,
                            node.column,
                        )
                    )
                    continue
                message = _arity_message(node.func, len(node.args))
                if message:
                    diagnostics.append(
                        Diagnostic(
                            "arity", message, module.name, node.func, node.line, node.column
                        )
                    )
    return diagnostics
