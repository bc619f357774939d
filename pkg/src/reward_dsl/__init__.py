from src.reward_dsl.ast_nodes import RewardModule, RewardProgram
from src.reward_dsl.catalog import (
    CatalogConstant,
    CatalogEntry,
    RewardConstraints,
    VariableCatalog,
)
from src.reward_dsl.evaluator import (
    EvalError,
    ModuleEvalReport,
    ProgramValue,
    ValueStats,
    evaluate_batch,
    evaluate_program,
)
from src.reward_dsl.lexer import ParseError
from src.reward_dsl.parser import MAX_DEPTH, parse_program
from src.reward_dsl.printer import print_program
from src.reward_dsl.validator import FUNCTION_ARITY, Diagnostic, validate
