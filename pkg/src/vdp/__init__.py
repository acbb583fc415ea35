"""First-order discriminator synthesis for visual discrimination puzzles."""

from .logic import (
    And,
    Atom,
    Const,
    Cost,
    Eq,
    Exists,
    Forall,
    Formula,
    Implies,
    LogicError,
    Model,
    Not,
    Or,
    Signature,
    Sort,
    Var,
    canonicalize,
    check_vacuous,
    check_well_sorted,
    cost_of,
    evaluate,
    free_vars,
    model_from_labels,
    print_formula,
)
from .scenes import (
    Detection,
    ExtractionConfig,
    SceneDetections,
    SchemaError,
    build_model,
    geometric_relations,
    load_detections,
)
from .syntax import ParseError, parse_formula
from .synthesis import (
    DiscriminatorResult,
    Puzzle,
    SynthesisConfig,
    SynthesisOutcome,
    enumerate_formulas,
    is_discriminator,
    synthesize,
)

__all__ = [name for name in dir() if not name.startswith("_")]
