"""Behavioral file-format dialects from monotonic decompositions of message-pattern counts."""
from .decomp import (
    CountFunction,
    MonotonicDecomposition,
    MonotonicTerm,
    count_violations,
    decompose,
    dialect_count_lower_bound,
    drop_zero_terms,
    irredundant_cover,
    is_irredundant,
    max_monotonic_lower_bound,
    max_refined_decomposition,
    pointwise_max,
    refines,
)
from .enumerate import enumerate_integer_decompositions, minimal_decompositions
from .poset import MessagePattern, MessageUniverse, PatternPoset, build_poset, minimal_elements, upper_set

__version__ = "0.1.0"
