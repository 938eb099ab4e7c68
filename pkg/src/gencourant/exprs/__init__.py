"""Expression DSL and second-order jet arithmetic."""

from .evaluate import Jet2, eval_jet, evaluate
from .jet import Jet, JetOrderError, jein, jinv, random_germ, stack
from .parser import (
    ArityError,
    Expr,
    ExprDomainError,
    ExprError,
    ExprSyntaxError,
    UnknownIdentifierError,
    parse,
)

__all__ = [
    "ArityError",
    "Expr",
    "ExprDomainError",
    "ExprError",
    "ExprSyntaxError",
    "Jet",
    "Jet2",
    "JetOrderError",
    "UnknownIdentifierError",
    "eval_jet",
    "evaluate",
    "jein",
    "jinv",
    "parse",
    "random_germ",
    "stack",
]
