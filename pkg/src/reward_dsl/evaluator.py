from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence
from logging import getLogger
import math

from pydantic import BaseModel

from src.reward_dsl.ast_nodes import (
    BinaryOp,
    BoolOp,
    Call,
    Compare,
    IfExpr,
    Name,
    Not,
    Number,
    RewardProgram,
    UnaryOp,
)
from src.reward_dsl.catalog import RewardConstraints
from src.simulator.game_schema import PlaytestRow

logger = getLogger(__name__)


class EvalError(Exception):
    """Numeric failure while evaluating one module on one row."""

    def __init__(self, module: str, operation: str, message: str):
        self.module = module
        self.operation = operation
        super().__init__(f"module {module}: {operation}: {message}")


class _Failure(Exception):
    def __init__(self, operation: str, message: str):
        self.operation = operation
        self.message = message
        super().__init__(message)


class ProgramValue(NamedTuple):
    modules: Dict[str, float]
    total: float


def _finite(value: float, operation: str) -> float:
    if not math.isfinite(value):
        raise _Failure(operation, f"result is not finite ({value})")
    return value


def _mean(values: Sequence[float]) -> float:
    try:
        return math.fsum(values) / len(values)
    except OverflowError:
        scale = max(abs(v) for v in values)
        return scale * (math.fsum(v / scale for v in values) / len(values))


def _spread(values: Sequence[float], centre: float) -> float:
    try:
        spread = math.sqrt(math.fsum((v - centre) ** 2 for v in values) / len(values))
        if math.isfinite(spread):
            return spread
    except OverflowError:
        pass
    # halved deviations cannot overflow for finite inputs
    halves = [v / 2 - centre / 2 for v in values]
    scale = max(abs(h) for h in halves)
    root = math.sqrt(math.fsum((h / scale) ** 2 for h in halves) / len(values))
    return scale * root * 2


def _std(values: Sequence[float]) -> float:
    return _spread(values, _mean(values))


def _call(func: str, args: List[float]) -> float:
    if func == "abs":
        return abs(args[0])
    if func == "min":
        return min(args)
    if func == "max":
        return max(args)
    if func == "clamp":
        value, low, high = args
        if low > high:
            raise _Failure("clamp", f"lower bound {low} exceeds upper bound {high}")
        return min(high, max(low, value))
    if func in ("mean", "std"):
        try:
            return _mean(args) if func == "mean" else _std(args)
        except (OverflowError, ValueError) as e:
            raise _Failure(func, f"{func} of {args} failed: {e}") from None
    if func == "sqrt":
        if args[0] < 0.0:
            raise _Failure("sqrt", f"square root of negative value {args[0]}")
        return math.sqrt(args[0])
    if func == "exp":
        try:
            return math.exp(args[0])
        except OverflowError:
            raise _Failure("exp", f"exp({args[0]}) overflows") from None
    if func == "log":
        if args[0] <= 0.0:
            raise _Failure("log", f"logarithm of non-positive value {args[0]}")
        return math.log(args[0])
    raise _Failure(func, f"unknown function {func!r}")


def _eval(node, bindings: Mapping[str, float]):
    if isinstance(node, Number):
        return node.value
    if isinstance(node, Name):
        try:
            return bindings[node.name]
        except KeyError:
            raise _Failure("lookup", f"unbound identifier {node.name!r}") from None
    if isinstance(node, UnaryOp):
        return -_eval(node.operand, bindings)
    if isinstance(node, BinaryOp):
        left = _eval(node.left, bindings)
        right = _eval(node.right, bindings)
        if node.op == "+":
            return _finite(left + right, "addition")
        if node.op == "-":
            return _finite(left - right, "subtraction")
        if node.op == "*":
            return _finite(left * right, "multiplication")
        if right == 0.0:
            raise _Failure("division", "division by zero")
        return _finite(left / right, "division")
    if isinstance(node, Call):
        args = [_eval(arg, bindings) for arg in node.args]
        return _finite(_call(node.func, args), node.func)
    if isinstance(node, IfExpr):
        branch = node.then if _eval(node.condition, bindings) else node.otherwise
        return _eval(branch, bindings)
    if isinstance(node, Compare):
        left = _eval(node.left, bindings)
        right = _eval(node.right, bindings)
        return {
            "<": left < right,
            "<=": left <= right,
            ">": left > right,
            ">=": left >= right,
            "==": left == right,
        }[node.op]
    if isinstance(node, BoolOp):
        if node.op == "and":
            return _eval(node.left, bindings) and _eval(node.right, bindings)
        return _eval(node.left, bindings) or _eval(node.right, bindings)
    if isinstance(node, Not):
        return not _eval(node.operand, bindings)
    raise TypeError(f"not a reward expression node: {node!r}")


def evaluate_program(program: RewardProgram, bindings: Mapping[str, float]) -> ProgramValue:
    """
    Evaluates every module of a program on one set of bindings.

    Args:
        program: Validated program.
        bindings: Variable and constant values by name.

    Returns:
        ProgramValue: Per-module values and the weighted total.

    Raises:
        EvalError: Naming the module and operation that failed; non-finite
            intermediate results are failures too.
    """
    values: Dict[str, float] = {}
    total = 0.0
    for module in program.modules:
        try:
            value = float(_eval(module.body, bindings))
        except _Failure as failure:
            raise EvalError(module.name, failure.operation, failure.message) from None
        values[module.name] = value
        total += module.weight * value
    if not math.isfinite(total):
        raise EvalError("total", "weighted sum", f"result is not finite ({total})")
    return ProgramValue(modules=values, total=total)


class ValueStats(BaseModel):
    min: float
    max: float
    mean: float
    std: float


class ErrorRows(BaseModel):
    count: int = 0
    first_diagnostic: Optional[str] = None


class ModuleEvalReport(BaseModel):
    """Descriptive statistics of a program evaluated over M playtest rows."""

    modules: Dict[str, Optional[ValueStats]]
    total: Optional[ValueStats]
    n_rows: int
    output_range: List[float]
    range_violations: int
    error_rows: ErrorRows

    def to_text(self) -> str:
        """Plain-text table for feedback prompts."""
        lines = [f"{'name':<28} {'min':>12} {'max':>12} {'mean':>12} {'std':>12}"]
        entries = list(self.modules.items()) + [("TOTAL", self.total)]
        for name, stats in entries:
            if stats is None:
                lines.append(f"{name:<28} {'n/a':>12} {'n/a':>12} {'n/a':>12} {'n/a':>12}")
            else:
                lines.append(
                    f"{name:<28} {stats.min:>12.6g} {stats.max:>12.6g} "
                    f"{stats.mean:>12.6g} {stats.std:>12.6g}"
                )
        low, high = self.output_range
        lines.append(f"rows evaluated: {self.n_rows}")
        lines.append(
            f"range_violations: {self.range_violations}/{self.n_rows} totals outside [{low:g}, {high:g}]"
        )
        lines.append(f"error_rows: {self.error_rows.count}/{self.n_rows}")
        if self.error_rows.first_diagnostic:
            lines.append(f"first error: {self.error_rows.first_diagnostic}")
        return "\n".join(lines)


def _stats(values: Sequence[float]) -> ValueStats:
    low, high = min(values), max(values)
    # fsum keeps identical rows exact: min == max == mean and std == 0
    centre = min(high, max(low, _mean(values)))
    spread = _spread(values, centre)
    return ValueStats(min=low, max=high, mean=centre, std=spread)


def evaluate_batch(
    program: RewardProgram,
    rows: Sequence[PlaytestRow | Mapping[str, float]],
    constraints: RewardConstraints,
) -> ModuleEvalReport:
    """
    Evaluates a program over M rows and summarizes the values.

    Args:
        program: Validated program.
        rows: Playtest rows (M ≥ 1).
        constraints: Catalog for bindings and the declared output range.

    Returns:
        ModuleEvalReport: Statistics over the rows that evaluated; rows that
        raised are counted in error_rows and excluded from the statistics.

    Raises:
        ValueError: If rows is empty.
    """
    if not rows:
        raise ValueError("evaluate_batch needs at least one row")
    low, high = constraints.output_range
    records = []
    errors = ErrorRows()
    for index, row in enumerate(rows):
        try:
            value = evaluate_program(program, constraints.catalog.bind(row))
        except EvalError as e:
            errors.count += 1
            if errors.first_diagnostic is None:
                errors.first_diagnostic = f"row {index}: {e}"
            continue
        records.append(value)

    names = program.module_names
    if records:
        module_stats = {name: _stats([r.modules[name] for r in records]) for name in names}
        totals = [r.total for r in records]
        total_stats = _stats(totals)
        violations = sum(1 for total in totals if total < low or total > high)
    else:
        module_stats = {name: None for name in names}
        total_stats = None
        violations = 0
    if errors.count:
        logger.warning(f"{errors.count}/{len(rows)} rows failed: {errors.first_diagnostic}")

    return ModuleEvalReport(
        modules=module_stats,
        total=total_stats,
        n_rows=len(rows),
        output_range=[low, high],
        range_violations=violations,
        error_rows=errors,
    )
