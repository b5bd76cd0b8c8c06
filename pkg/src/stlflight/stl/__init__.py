from .ast import (
    AXES,
    And,
    Always,
    Box,
    Eventually,
    Formula,
    Not,
    Or,
    Predicate,
    Until,
    formula_channels,
    in_box,
    min_separation,
)
from .parser import SpecSyntaxError, parse_spec
from .semantics import (
    Verdict,
    horizon,
    horizon_steps,
    robustness,
    robustness_signal,
    satisfies,
    window_indices,
)
from .trace import MultiTrace, TraceTooShortError

__all__ = [
    "AXES",
    "And",
    "Always",
    "Box",
    "Eventually",
    "Formula",
    "MultiTrace",
    "Not",
    "Or",
    "Predicate",
    "SpecSyntaxError",
    "TraceTooShortError",
    "Until",
    "Verdict",
    "formula_channels",
    "horizon",
    "horizon_steps",
    "in_box",
    "min_separation",
    "parse_spec",
    "robustness",
    "robustness_signal",
    "satisfies",
    "window_indices",
]
