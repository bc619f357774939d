from dataclasses import dataclass, field
from typing import Tuple, Union

# Positions and depth are bookkeeping: they never take part in equality, so a
# reprinted program compares equal to the one it was printed from.


@dataclass(frozen=True)
class Number:
    value: float
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)
    depth: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Name:
    name: str
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)
    depth: int = field(default=1, compare=False)


@dataclass(frozen=True)
class UnaryOp:
    op: str
    operand: "Expr"
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)
    depth: int = field(default=1, compare=False)


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: "Expr"
    right: "Expr"
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)
    depth: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    args: Tuple["Expr", ...]
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)
    depth: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Compare:
    op: str
    left: "Expr"
    right: "Expr"
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)
    depth: int = field(default=1, compare=False)


@dataclass(frozen=True)
class BoolOp:
    op: str
    left: "Condition"
    right: "Condition"
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)
    depth: int = field(default=1, compare=False)


@dataclass(frozen=True)
class Not:
    operand: "Condition"
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)
    depth: int = field(default=1, compare=False)


@dataclass(frozen=True)
class IfExpr:
    condition: "Condition"
    then: "Expr"
    otherwise: "Expr"
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)
    depth: int = field(default=1, compare=False)


Expr = Union[Number, Name, UnaryOp, BinaryOp, Call, IfExpr]
Condition = Union[Compare, BoolOp, Not]


@dataclass(frozen=True)
class RewardModule:
    """One design insight implemented as a weighted expression."""

    name: str
    weight: float
    body: Expr
    insight_text: str = ""
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class RewardProgram:
    """
    A parsed modular reward function.

    total(row) is the weighted sum of the module values, in module order.
    """

    modules: Tuple[RewardModule, ...]
    name: str = field(default="reward", compare=False)
    source_text: str = field(default="", compare=False)

    @property
    def module_names(self) -> Tuple[str, ...]:
        return tuple(module.name for module in self.modules)

    def module(self, name: str) -> RewardModule:
        for module in self.modules:
            if module.name == name:
                return module
        raise KeyError(name)


def iter_nodes(node):
    """Yields a node and all of its descendants, depth first."""
    stack = [node]
    while stack:
        current = stack.pop()
        yield current
        if isinstance(current, (UnaryOp, Not)):
            stack.append(current.operand)
        elif isinstance(current, (BinaryOp, Compare, BoolOp)):
            stack.extend((current.right, current.left))
        elif isinstance(current, Call):
            stack.extend(reversed(current.args))
        elif isinstance(current, IfExpr):
            stack.extend((current.otherwise, current.then, current.condition))
