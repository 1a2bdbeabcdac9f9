"""Pattern extraction and parameter-vector primitives.

A pattern replaces each token of a sequence by the rank of its value in order
of first appearance: "lossless" becomes 1 2 3 3 1 4 3 3. Two sequences share
a pattern exactly when one is a symbol-renaming of the other, so patterns
partition sequence space and capture everything a decoder can learn before
the symbol dictionary arrives.

Conventions used throughout the package:

* patterns are 1-based integer sequences; index j means "the j-th distinct
  value seen so far";
* parameter vectors are probability vectors summing to 1 within ``SUM_TOL``;
* permutations are 1-based index tuples applied as result[i] = theta[sigma[i]].
"""

from __future__ import annotations

import re
from collections import Counter
from math import log2

import numpy as np

# Probability vectors must sum to 1 within this tolerance.
SUM_TOL = 1e-12

_WORD_RE = re.compile(rb"\S+|\s+")


def extract_pattern(seq) -> list[int]:
    """Return the pattern of ``seq`` as a list of 1-based indices.

    Tokens may be any hashable values (ints, bytes, strings). The first
    distinct token maps to 1, the second to 2, and so on.

    >>> extract_pattern("lossless")
    [1, 2, 3, 3, 1, 4, 3, 3]
    """
    seen: dict = {}
    out = []
    for tok in seq:
        idx = seen.get(tok)
        if idx is None:
            idx = len(seen) + 1
            seen[tok] = idx
        out.append(idx)
    return out


def extract_pattern_array(values: np.ndarray) -> np.ndarray:
    """Vectorized :func:`extract_pattern` for a 1-D integer array."""
    values = np.asarray(values)
    if values.ndim != 1:
        raise ValueError("expected a 1-D array")
    if values.size == 0:
        return np.zeros(0, dtype=np.int64)
    _, first_idx, inverse = np.unique(values, return_index=True, return_inverse=True)
    # Rank each distinct value by the position of its first occurrence.
    rank = np.empty(first_idx.size, dtype=np.int64)
    rank[np.argsort(first_idx, kind="stable")] = np.arange(1, first_idx.size + 1)
    return rank[inverse]


def is_valid_pattern(indices) -> bool:
    """True when ``indices`` is a legal pattern.

    Legal means: every entry is a positive integer, the first entry is 1, and
    each entry is at most one larger than the running maximum (a new index is
    always the smallest unused one). The empty sequence is legal.
    """
    high = 0
    for idx in indices:
        if not isinstance(idx, (int, np.integer)) or isinstance(idx, bool):
            return False
        if idx < 1 or idx > high + 1:
            return False
        if idx == high + 1:
            high = idx
    return True


def canonical_sequence(pattern) -> list[int]:
    """Return the pattern's indices read back as a sequence of symbols.

    The canonical sequence is its own pattern, which makes it the natural
    representative of the renaming class the pattern stands for.
    """
    pattern = list(pattern)
    if not is_valid_pattern(pattern):
        raise ValueError("not a valid pattern")
    return pattern


def occurrence_counts(pattern) -> np.ndarray:
    """Counts n_j of each pattern index, in index order (j = 1..k)."""
    arr = np.asarray(list(pattern), dtype=np.int64)
    if arr.size == 0:
        return np.zeros(0, dtype=np.int64)
    if not is_valid_pattern(arr.tolist()):
        raise ValueError("not a valid pattern")
    return np.bincount(arr)[1:]


def pattern_prefix_stats(pattern) -> tuple[np.ndarray, np.ndarray]:
    """Per-position statistics needed by the sequential models.

    Returns ``(occ_before, distinct_before)`` where ``occ_before[i]`` counts
    earlier positions holding the same index and ``distinct_before[i]`` is the
    number of distinct indices seen strictly before position i.
    """
    p = np.asarray(list(pattern), dtype=np.int64)
    n = p.size
    if n == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    order = np.argsort(p, kind="stable")
    sorted_p = p[order]
    new_group = np.r_[True, sorted_p[1:] != sorted_p[:-1]]
    starts = np.flatnonzero(new_group)
    sizes = np.diff(np.r_[starts, n])
    cumcount = np.arange(n) - np.repeat(starts, sizes)
    occ_before = np.empty(n, dtype=np.int64)
    occ_before[order] = cumcount
    distinct_before = np.r_[0, np.maximum.accumulate(p)[:-1]]
    return occ_before, distinct_before


def iid_ml(seq) -> float:
    """log2 of the maximum-likelihood i.i.d. probability of ``seq``.

    The ML distribution puts mass n_j/n on each observed value, so the log
    probability is sum_j n_j * log2(n_j / n). Returned in log2 form because
    the plain probability underflows for any interesting length.
    """
    counts = Counter(seq)
    n = sum(counts.values())
    if n == 0:
        raise ValueError("empty sequence")
    return sum(c * log2(c / n) for c in counts.values())


def as_param_vector(values, tol: float = SUM_TOL) -> np.ndarray:
    """Validate and return ``values`` as a probability vector."""
    theta = np.asarray(values, dtype=np.float64)
    if theta.ndim != 1 or theta.size == 0:
        raise ValueError("parameter vector must be 1-D and non-empty")
    if np.any(theta < 0):
        raise ValueError("parameter vector has negative entries")
    total = float(theta.sum())
    if abs(total - 1.0) > tol:
        raise ValueError(f"parameter vector sums to {total!r}, not 1")
    return theta


def order_params(theta) -> tuple[np.ndarray, tuple[int, ...]]:
    """Sort ``theta`` ascending and return (sorted, sigma).

    ``sigma`` is the 1-based permutation with
    ``permute_params(theta, sigma) == sorted``; ties keep their original
    relative order (stable sort), so the permutation is deterministic.
    """
    theta = np.asarray(theta, dtype=np.float64)
    order = np.argsort(theta, kind="stable")
    return theta[order], tuple(int(i) + 1 for i in order)


def permute_params(theta, sigma) -> np.ndarray:
    """Apply a 1-based permutation: result[i] = theta[sigma[i] - 1]."""
    theta = np.asarray(theta, dtype=np.float64)
    idx = np.asarray(sigma, dtype=np.int64) - 1
    if sorted(idx.tolist()) != list(range(theta.size)):
        raise ValueError("sigma is not a permutation of 1..len(theta)")
    return theta[idx]


def l2_distance(a, b) -> float:
    """Euclidean distance between two parameter vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("vectors differ in length")
    return float(np.linalg.norm(a - b))


def tokenize(data: bytes, mode: str) -> list:
    """Split raw bytes into tokens.

    mode="bytes" yields one int token per byte; mode="words" yields maximal
    runs of non-whitespace and whitespace bytes alternately, so joining the
    tokens restores the input exactly.
    """
    if mode == "bytes":
        return list(data)
    if mode == "words":
        return [m.group(0) for m in _WORD_RE.finditer(data)]
    raise ValueError(f"unknown token mode {mode!r}")


def detokenize(tokens, mode: str) -> bytes:
    """Inverse of :func:`tokenize`."""
    if mode == "bytes":
        return bytes(tokens)
    if mode == "words":
        return b"".join(tokens)
    raise ValueError(f"unknown token mode {mode!r}")
