"""Finite-stage construction of the free one-generated uniform Banach group.

A countable set carries a free-group structure and a dyadic vector-space
structure sharing one unit; bi-invariant metrics (odd stages) and norms
(even stages) are extended alternately as greatest functions under
closure rules, with every invariant executable and exactly checkable.
"""

from .scalars import Dyadic, full_scalar_set
from .stages import BudgetExceededError, Config, Stage, Universe
from .terms import (
    ComboTerm,
    GenTerm,
    TermStore,
    UNIT,
    UNIT_ID,
    UnitTerm,
    WordTerm,
)
from .universal import TargetSpace

__all__ = [
    "BudgetExceededError",
    "ComboTerm",
    "Config",
    "Dyadic",
    "GenTerm",
    "Stage",
    "TargetSpace",
    "TermStore",
    "UNIT",
    "UNIT_ID",
    "UnitTerm",
    "Universe",
    "WordTerm",
    "full_scalar_set",
]

__version__ = "0.1.0"
