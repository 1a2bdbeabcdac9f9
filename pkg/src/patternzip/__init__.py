"""Pattern-based universal compression.

Sequential coding distributions over patterns (the order-of-first-occurrence
skeleton of a sequence), an arithmetic coder and container format built on
them, exact pattern probabilities for small alphabets, a two-part
quantized-parameter code, redundancy bound evaluators, and simulation
utilities.
"""

from patternzip.patterns import (
    extract_pattern,
    is_valid_pattern,
    canonical_sequence,
    occurrence_counts,
    iid_ml,
    order_params,
    permute_params,
    l2_distance,
)

__all__ = [
    "extract_pattern",
    "is_valid_pattern",
    "canonical_sequence",
    "occurrence_counts",
    "iid_ml",
    "order_params",
    "permute_params",
    "l2_distance",
]

__version__ = "0.1.0"
