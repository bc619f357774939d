import numpy as np
import pytest

from src.reward_dsl.catalog import RewardConstraints
from src.reward_dsl.evaluator import EvalError, evaluate_batch, evaluate_program
from src.reward_dsl.lexer import ParseError
from src.reward_dsl.parser import MAX_DEPTH, parse_program
from src.reward_dsl.printer import print_program
from src.reward_dsl.validator import validate
from src.simulator.game_schema import CATALOG_VARIABLES
from tests.conftest import make_row

CORPUS = [
    "module dmg weight 0.5:\n  clamp((damage_dealt_p1 + damage_dealt_p2 + damage_dealt_p3 + damage_dealt_p4) / 4000, 0, 1)",
    "module c weight 1:\n  0.25",
    "module neg weight -0.5:\n  -damage_taken_p1 / max_episode_time",
    "# Survive long.\nmodule s weight 0.4:\n  mean(survive_time_p1, survive_time_p2) / max_episode_time",
    "module a weight 1:\n  1 - (2 - 3)",
    "module a weight 1:\n  (1 - 2) - 3",
    "module a weight 1:\n  8 / (4 / 2)",
    "module a weight 1:\n  8 / 4 / 2",
    "module a weight 1:\n  -(-attack_count_p1)",
    "module a weight 1:\n  if(survive_time_p1 >= max_episode_time, 1, 0)",
    "module a weight 0.3:\n  if(not (damage_dealt_p1 > 10 and damage_dealt_p2 > 10), -1, 1)",
    "module a weight 0.3:\n  if(damage_dealt_p1 > 10 or damage_dealt_p2 > 10 and downtime_p1 < 5, 1, 0)",
    "module a weight 0.3:\n  if((damage_dealt_p1 > 10 or damage_dealt_p2 > 10) and downtime_p1 < 5, 1, 0)",
    "module a weight 1:\n  if((moved_distance_p1 + moved_distance_p2) * 2 > 30, sqrt(moved_distance_p1), 0)",
    "module a weight 1:\n  log(1 + exp(-abs(health_remaining_p1 - health_remaining_p2) / 100))",
    "module a weight 1e-3:\n  max(attack_count_p1, attack_count_p2, attack_count_p3) - min(attack_count_p1, attack_count_p2)",
    "module first weight 0.5:\n  time_in_range_p1 / max_episode_time\n\nmodule second weight 0.5:\n  time_in_range_p2 / max_episode_time",
    "# Line one\n# line two\nmodule a weight 2.5:\n  std(damage_taken_p1, damage_taken_p2, damage_taken_p3, damage_taken_p4) / boss_max_health",
    "module a weight 1:\n  if(not not survive_time_p1 == survive_time_p2, n_players, 0)",
    "module a weight 1:\n  clamp(damage_dealt_p3 * (1 - downtime_p3 / max_episode_time), 0, 1000) / 1000",
    "module a weight 0.1:\n  if(if(downtime_p4 > 3, 1, 0) == 1, 2, 3)",
    "module a weight 1:\n  2 * -3 + 4 * (5 - 6) / 7",
    "module a weight 1:\n  (1 + 2) * (3 + 4) - -5",
    "module a weight 1:\n  if(1 < 2 and 2 < 3 and 3 < 4, 1, 0)",
]


@pytest.mark.parametrize("source", CORPUS)
def test_print_parse_fixpoint(source, constraints):
    program = parse_program(source)
    printed = print_program(program)
    reparsed = parse_program(printed)
    assert reparsed == program
    assert print_program(reparsed) == printed
    assert validate(program, constraints) == []


def test_parses_a_one_module_program():
    program = parse_program(CORPUS[0])
    assert program.module_names == ("dmg",)
    assert program.modules[0].weight == 0.5


def test_insight_comment_is_attached_to_the_module():
    program = parse_program(CORPUS[17])
    assert program.modules[0].insight_text == "Line one\nline two"
    assert print_program(program).startswith("# Line one\n# line two\nmodule a")


def test_missing_weight_reports_position_and_expected_token():
    with pytest.raises(ParseError) as caught:
        parse_program("module x weight:")
    assert (caught.value.line, caught.value.column) == (1, 16)
    assert caught.value.expected == frozenset({"NUMBER"})


def test_single_equals_is_a_lexical_error():
    with pytest.raises(ParseError, match="did you mean"):
        parse_program("module a weight 1:\n  if(downtime_p1 = 1, 1, 0)")


def test_nesting_beyond_the_cap_is_a_parse_error():
    source = "module m weight 1:\n  " + "(" * (MAX_DEPTH + 6) + "1" + ")" * (MAX_DEPTH + 6)
    with pytest.raises(ParseError, match="deeper"):
        parse_program(source)


def test_malformed_inputs_always_yield_positioned_errors():
    rng = np.random.default_rng(2024)
    alphabet = list("()+-*/,:<>=#!.$ \n_09eaifmodulewt") + ["module", "weight", "if", "and", "not"]
    for case in range(1000):
        text = CORPUS[case % len(CORPUS)]
        chars = list(text)
        for _ in range(int(rng.integers(1, 6))):
            position = int(rng.integers(0, len(chars) + 1))
            operation = int(rng.integers(0, 3))
            if operation == 0 and chars:
                del chars[min(position, len(chars) - 1)]
            elif operation == 1:
                chars.insert(position, alphabet[int(rng.integers(0, len(alphabet)))])
            elif chars:
                chars[min(position, len(chars) - 1)] = alphabet[int(rng.integers(0, len(alphabet)))]
        mutated = "".join(chars)
        try:
            parse_program(mutated)
        except ParseError as e:
            assert e.line >= 1
            assert e.column >= 1


def test_validate_reports_unknown_identifier(constraints):
    program = parse_program("module heal weight 1:\n  heal_done_p1 / 10")
    diagnostics = validate(program, constraints)
    assert len(diagnostics) == 1
    assert diagnostics[0].code == "unknown-identifier"
    assert diagnostics[0].identifier == "heal_done_p1"
    assert diagnostics[0].module == "heal"


def test_validate_reports_arity(constraints):
    program = parse_program("module a weight 1:\n  clamp(damage_dealt_p1, 0)")
    diagnostics = validate(program, constraints)
    assert [d.code for d in diagnostics] == ["arity"]
    assert "clamp expects 3" in diagnostics[0].message


def test_validate_reports_unknown_function_and_duplicate_module(constraints):
    program = parse_program("module a weight 1:\n  tanh(1)\n\nmodule a weight 1:\n  1")
    codes = sorted(d.code for d in validate(program, constraints))
    assert codes == ["duplicate-module", "unknown-function"]


def test_evaluates_hand_computed_module():
    program = parse_program("module d weight 1.0:\n  clamp(damage_dealt_p1 / 1000, 0, 1)")
    value = evaluate_program(program, {"damage_dealt_p1": 500.0})
    assert value.modules == {"d": 0.5}
    assert value.total == 0.5


def test_convex_weights_on_equal_values():
    program = parse_program("module a weight 0.97:\n  1\n\nmodule b weight 0.03:\n  1")
    assert evaluate_program(program, {}).total == pytest.approx(1.0, abs=1e-12)


def test_division_by_zero_names_module_and_operation():
    program = parse_program("module bad weight 1:\n  1 / (survive_time_p1 - survive_time_p1)")
    with pytest.raises(EvalError) as caught:
        evaluate_program(program, {"survive_time_p1": 3.0})
    assert caught.value.module == "bad"
    assert caught.value.operation == "division"


@pytest.mark.parametrize(
    "body, operation",
    [("sqrt(0 - 1)", "sqrt"), ("log(0)", "log"), ("exp(1000)", "exp"), ("clamp(1, 2, 0)", "clamp")],
)
def test_numeric_failures_raise(body, operation):
    with pytest.raises(EvalError) as caught:
        evaluate_program(parse_program(f"module m weight 1:\n  {body}"), {})
    assert caught.value.operation == operation


def test_mean_and_std_of_huge_values_stay_finite():
    assert evaluate_program(parse_program("module a weight 1:\n  mean(1e308, 1e308)"), {}).total == 1e308
    spread = evaluate_program(parse_program("module a weight 1:\n  std(1e200, 0 - 1e200)"), {})
    assert spread.total == pytest.approx(1e200)
    assert evaluate_program(parse_program("module a weight 1:\n  std(2, 4)"), {}).total == 1.0


def test_mean_beyond_float_range_is_an_eval_error():
    with pytest.raises(EvalError) as caught:
        evaluate_program(parse_program("module a weight 1:\n  mean(1e308, 1e308) * 10"), {})
    assert caught.value.operation == "multiplication"
    with pytest.raises(EvalError) as caught:
        evaluate_program(parse_program("module a weight 1:\n  std(1e308, 0 - 1e308, 1e308, 0 - 1e308) * 2"), {})
    assert caught.value.module == "a"


def test_batch_of_huge_values_reports_statistics(constraints):
    program = parse_program("module big weight 1:\n  (damage_dealt_p1 - 1) * 1e200")
    rows = [make_row(seed=0, damage_dealt_p1=0.0), make_row(seed=1, damage_dealt_p1=2.0)]
    report = evaluate_batch(program, rows, constraints)
    stats = report.modules["big"]
    assert (stats.min, stats.max) == (-1e200, 1e200)
    assert stats.mean == 0.0
    assert stats.std == pytest.approx(1e200)
    assert report.range_violations == 2
    assert report.error_rows.count == 0


def test_if_and_boolean_operators():
    program = parse_program(CORPUS[12])
    assert evaluate_program(program, {"damage_dealt_p1": 20, "damage_dealt_p2": 0, "downtime_p1": 1}).total == pytest.approx(0.3)
    assert evaluate_program(program, {"damage_dealt_p1": 20, "damage_dealt_p2": 0, "downtime_p1": 9}).total == 0.0


def test_scaling_weights_scales_totals():
    program = parse_program(CORPUS[16])
    doubled = parse_program(CORPUS[16].replace("weight 0.5", "weight 1"))
    bindings = {"time_in_range_p1": 120.0, "time_in_range_p2": 45.0, "max_episode_time": 300.0}
    assert evaluate_program(doubled, bindings).total == 2 * evaluate_program(program, bindings).total


def test_batch_matches_per_row_evaluation(constraints):
    program = parse_program(CORPUS[0] + "\n\n" + CORPUS[3])
    rng = np.random.default_rng(4)
    rows = [
        make_row(seed=i, **{name: float(rng.uniform(0, 300)) for name in CATALOG_VARIABLES})
        for i in range(20)
    ]
    report = evaluate_batch(program, rows, constraints)
    per_row = [evaluate_program(program, constraints.catalog.bind(row)) for row in rows]
    assert report.n_rows == 20
    assert report.modules["dmg"].mean == pytest.approx(np.mean([v.modules["dmg"] for v in per_row]), abs=1e-12)
    assert report.modules["s"].std == pytest.approx(np.std([v.modules["s"] for v in per_row]), abs=1e-12)
    assert report.total.max == max(v.total for v in per_row)
    assert report.error_rows.count == 0


def test_batch_of_identical_rows_has_zero_spread(constraints):
    program = parse_program(CORPUS[0])
    report = evaluate_batch(program, [make_row(damage_dealt_p1=123.4)] * 5, constraints)
    stats = report.modules["dmg"]
    assert stats.std == 0.0
    assert stats.min == stats.max == stats.mean


def test_batch_counts_range_violations_and_error_rows(constraints):
    rows = [make_row(seed=i) for i in range(4)]
    constant = evaluate_batch(parse_program("module big weight 1:\n  2"), rows, constraints)
    assert constant.range_violations == 4
    assert "range_violations: 4/4" in constant.to_text()

    failing = evaluate_batch(
        parse_program("module bad weight 1:\n  1 / (downtime_p1 - downtime_p1)"), rows, constraints
    )
    assert failing.error_rows.count == 4
    assert failing.total is None
    assert "row 0" in failing.error_rows.first_diagnostic


def test_empty_batch_is_rejected(constraints):
    with pytest.raises(ValueError):
        evaluate_batch(parse_program(CORPUS[1]), [], constraints)


def test_constraints_need_an_ordered_range(catalog):
    with pytest.raises(ValueError):
        RewardConstraints(output_range=(1.0, -1.0), catalog=catalog)


def test_catalog_lists_every_variable_and_constant(catalog):
    assert catalog.variable_names() == CATALOG_VARIABLES
    assert {"max_episode_time", "n_players", "boss_max_health"} <= set(catalog.names())
    assert all(name in catalog.describe() for name in CATALOG_VARIABLES)
