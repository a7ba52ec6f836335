"""Minimum-cardinality tuple deletion for full conjunctive queries.

Decides whether removing at least ``k`` outputs of a self-join-free full CQ at
minimum cost is tractable, solves the tractable cases exactly and the rest by
a partial set cover approximation.
"""
from __future__ import annotations

from .classifier import RecursionTree, StepKind, build_recursion_tree, is_ptime
from .relational import (
    DatabaseInstance,
    DeletionSolution,
    QuerySpec,
    RelationSchema,
    evaluate_join,
    load_instance,
    make_instance,
    parse_query,
)

__version__ = "0.1.0"

__all__ = [
    "DatabaseInstance",
    "DeletionSolution",
    "QuerySpec",
    "RecursionTree",
    "RelationSchema",
    "StepKind",
    "build_recursion_tree",
    "evaluate_join",
    "is_ptime",
    "load_instance",
    "make_instance",
    "parse_query",
    "__version__",
]
