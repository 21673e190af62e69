"""Structural causal models for synthetic tabular data."""

from ._core import (
    ScmModel,
    Table,
    TabscmError,
    cli,
    discover,
    evaluate,
    ks_statistic,
    tv_distance,
)

__all__ = [
    "ScmModel",
    "Table",
    "TabscmError",
    "cli",
    "discover",
    "evaluate",
    "ks_statistic",
    "tv_distance",
]
