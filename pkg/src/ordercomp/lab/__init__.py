"""Exact filter models on Q, R and their products, with completion convergence tests."""

from .filters import (
    Characterization,
    Custom,
    EmptyTraceError,
    FilterBase,
    adherence_contains,
    characterization,
    converges_in_product_of_completions,
    converges_in_QQsharp,
    converges_in_Qsharp,
    filter_refines,
    image_filter,
    is_cauchy_metric,
    meet_filter,
    neighborhood,
    principal,
    product_filter,
    refinement,
    sequence_tail,
    trace_filter,
)
from .sets import Approximants, Atom, Const, Harmonic, Periodic, StructuralError, TaggedSet, is_subset
from .symreal import E, PI, SQRT2, SymReal, parse_symreal
