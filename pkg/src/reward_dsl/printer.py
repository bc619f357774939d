from src.reward_dsl.ast_nodes import (
    BinaryOp,
    BoolOp,
    Call,
    Compare,
    IfExpr,
    Name,
    Not,
    Number,
    RewardModule,
    RewardProgram,
    UnaryOp,
)

_ARITH_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}
_UNARY_PRECEDENCE = 3
_ATOM_PRECEDENCE = 4
_BOOL_PRECEDENCE = {"or": 1, "and": 2}
_NOT_PRECEDENCE = 3
_RELATION_PRECEDENCE = 4


def format_number(value: float) -> str:
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") and "e" not in text else text


def _precedence(node) -> int:
    if isinstance(node, BinaryOp):
        return _ARITH_PRECEDENCE[node.op]
    if isinstance(node, UnaryOp):
        return _UNARY_PRECEDENCE
    if isinstance(node, BoolOp):
        return _BOOL_PRECEDENCE[node.op]
    if isinstance(node, Not):
        return _NOT_PRECEDENCE
    if isinstance(node, Compare):
        return _RELATION_PRECEDENCE
    return _ATOM_PRECEDENCE


def _wrap(node, needs_parens: bool) -> str:
    text = format_expr(node)
    return f"({text})" if needs_parens else text


def format_expr(node) -> str:
    """Renders an expression or condition with the minimum of parentheses."""
    if isinstance(node, Number):
        return format_number(node.value)
    if isinstance(node, Name):
        return node.name
    if isinstance(node, UnaryOp):
        return node.op + _wrap(node.operand, _precedence(node.operand) < _UNARY_PRECEDENCE)
    if isinstance(node, (BinaryOp, BoolOp)):
        own = _precedence(node)
        left = _wrap(node.left, _precedence(node.left) < own)
        right = _wrap(node.right, _precedence(node.right) <= own)
        return f"{left} {node.op} {right}"
    if isinstance(node, Not):
        return "not " + _wrap(node.operand, _precedence(node.operand) < _NOT_PRECEDENCE)
    if isinstance(node, Compare):
        return f"{format_expr(node.left)} {node.op} {format_expr(node.right)}"
    if isinstance(node, Call):
        return f"{node.func}({', '.join(format_expr(arg) for arg in node.args)})"
    if isinstance(node, IfExpr):
        return (
            f"if({format_expr(node.condition)}, "
            f"{format_expr(node.then)}, {format_expr(node.otherwise)})"
        )
    raise TypeError(f"not a reward expression node: {node!r}")


def format_module(module: RewardModule) -> str:
    lines = []
    if module.insight_text:
        lines.extend(f"# {line}".rstrip() for line in module.insight_text.split("\n"))
    lines.append(f"module {module.name} weight {format_number(module.weight)}:")
    lines.append(f"  {format_expr(module.body)}")
    return "\n".join(lines)


def print_program(program: RewardProgram) -> str:
    """
    Renders a program back to reward-language text.

    Parsing the result yields a program equal to the input.
    """
    return "\n\n".join(format_module(module) for module in program.modules) + "\n"
