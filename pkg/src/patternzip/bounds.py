"""Closed-form redundancy bounds and the geometry behind the lower-bound
constructions.

Every function here is pure arithmetic on ``(n, k, eps)``: no sampling state,
no caches. Rates are bits per symbol, the ``*_bits_bound`` family is total
bits for a length-``n`` pattern, and every logarithm is base 2. Factorials
and ball volumes go through ``lgamma`` so small-instance tests can compare
against exact enumeration without Stirling error.

The minimax and most-sources floors and the achievable ceiling are asymptotic
statements that drop corrections with unpinned constants. A
:class:`BoundReport` keeps the displayed leading expression in ``value`` and
reports the dropped term separately in ``o_term`` instead of folding a guess
into the number. Only the sequential-coder ceilings
(:func:`known_k_bits_bound` and friends) have fully explicit constants, so
the measurement suites use those as hard inequalities and treat the rest as
direction and ordering checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LOG2E = math.log2(math.e)

# Feasibility guard for the exact lattice count.
_BALL_MAX_K = 6
_BALL_MAX_RADIUS_SQ = 10_000.0


@dataclass(frozen=True)
class BoundConfig:
    """Evaluation point for the region-split redundancy bounds.

    ``eps`` tilts the effective sequence length (``n**(1-eps)`` in the lower
    bounds, ``n**(1+eps)`` in the ceiling) and must lie strictly inside
    (0, 1). ``k`` may exceed ``n``: the large-alphabet regions are stated for
    arbitrarily large letter counts. ``eps_prime`` is only consulted by
    callers that need a second, strictly larger tilt (the ball-volume floor);
    it is validated here so a config carrying one is always coherent.
    """

    n: int
    k: int
    eps: float
    eps_prime: float | None = None

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("sequence length must be at least 2")
        if self.k < 1:
            raise ValueError("letter count must be positive")
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie strictly between 0 and 1")
        if self.eps_prime is not None and not self.eps < self.eps_prime < 1.0:
            raise ValueError("eps_prime must lie strictly between eps and 1")


@dataclass(frozen=True)
class BoundReport:
    """One evaluated bound plus its region bookkeeping.

    ``value`` is the displayed leading expression. ``threshold`` is the letter
    count at which the evaluator switches from the small-alphabet to the
    large-alphabet expression; it is always derived from ``(n, eps)``, never
    supplied. ``o_term`` reports the magnitude attributed to the dropped
    asymptotic correction; it stays zero unless the producing function says
    otherwise, and it is never added into ``value``.
    """

    value: float
    region: str
    threshold: float
    o_term: float = 0.0


def minimax_lower_bound(cfg: BoundConfig) -> BoundReport:
    """Worst-case floor on pattern redundancy, in bits per symbol.

    Small alphabets pay roughly half of ``log2(n**(1-eps)/k**3)`` per unknown
    parameter plus a positive constant ``log2(pi*e**3/2)/2`` per parameter.
    Past ``k = (pi*n**(1-eps)/2)**(1/3)`` (about ``1.16 * n**((1-eps)/3)``)
    the floor saturates and decays as ``n**(-(2+eps)/3)`` with coefficient
    ``(pi/2)**(1/3) * 1.5 * log2(e)``, about 2.52, no matter how large the
    alphabet grows. Dropped corrections are ``O(log k / n)`` respectively
    ``O(log n / n)``; both are reported as a zero ``o_term``.
    """
    n, k, eps = cfg.n, cfg.k, cfg.eps
    threshold = (math.pi * n ** (1.0 - eps) / 2.0) ** (1.0 / 3.0)
    if k <= threshold:
        per_param = (k - 1) / (2.0 * n)
        value = per_param * (
            (1.0 - eps) * math.log2(n)
            - 3.0 * math.log2(k)
            + math.log2(math.pi * math.e**3 / 2.0)
        )
        return BoundReport(value, "small-k", threshold)
    value = (math.pi / 2.0) ** (1.0 / 3.0) * 1.5 * LOG2E * n ** (-(2.0 + eps) / 3.0)
    return BoundReport(value, "large-k", threshold)


def most_sources_lower_bound(cfg: BoundConfig) -> BoundReport:
    """Redundancy floor holding for all but a vanishing fraction of sources.

    Same leading term as :func:`minimax_lower_bound` in the small-alphabet
    region, but the per-parameter constant is negative
    (``-log2(8*pi/e**3)/2``), so this floor sits below the worst-case one
    everywhere. The region switch happens earlier, at
    ``k = 0.5 * (n**(1-eps)/pi)**(1/3)``, and the large-alphabet coefficient
    ``1.5*log2(e)/(2*pi**(1/3))`` is about 0.74 against 2.52 for the minimax
    floor.
    """
    n, k, eps = cfg.n, cfg.k, cfg.eps
    threshold = 0.5 * (n ** (1.0 - eps) / math.pi) ** (1.0 / 3.0)
    if k <= threshold:
        per_param = (k - 1) / (2.0 * n)
        value = per_param * (
            (1.0 - eps) * math.log2(n)
            - 3.0 * math.log2(k)
            - math.log2(8.0 * math.pi / math.e**3)
        )
        return BoundReport(value, "small-k", threshold)
    value = 1.5 * LOG2E / (2.0 * math.pi ** (1.0 / 3.0)) * n ** (-(2.0 + eps) / 3.0)
    return BoundReport(value, "large-k", threshold)


def achievable_upper_bound(cfg: BoundConfig) -> BoundReport:
    """Redundancy a quantize-then-describe code attains, bits per symbol.

    Region 1 (``k <= sqrt(n**(1-eps))``) costs
    ``(1+eps) * (k-1)/(2n) * log2(n**(1+eps)/k**2)``. Region 2 decays like
    ``1/sqrt(n)`` with coefficient ``pi*sqrt(2/3)*log2(e)``, about 3.70. The
    region-2 correction is stated as ``O(1/n)``; this evaluator reports it as
    exactly ``1/n`` in ``o_term``, leaving ``value`` as the pure leading
    term.
    """
    n, k, eps = cfg.n, cfg.k, cfg.eps
    threshold = math.sqrt(n ** (1.0 - eps))
    if k <= threshold:
        value = (
            (1.0 + eps)
            * (k - 1)
            / (2.0 * n)
            * ((1.0 + eps) * math.log2(n) - 2.0 * math.log2(k))
        )
        return BoundReport(value, "small-k", threshold)
    value = math.pi * math.sqrt(2.0 / 3.0) * LOG2E / math.sqrt(n)
    return BoundReport(value, "large-k", threshold, o_term=1.0 / n)


def _check_bits_args(n: int, k: int) -> None:
    if n < 2:
        raise ValueError("sequence length must be at least 2")
    if not 1 <= k <= n:
        raise ValueError("letter count must lie between 1 and the sequence length")


def known_k_bits_bound(n: int, k: int) -> float:
    """Total-bits redundancy ceiling for the known-alphabet sequential coder.

    Holds for every pattern with ``k`` distinct indices, ``1 <= k <= n``:

        (k/2)*log2(n/k**3) + (19/12)*k*log2(e) - log2(n)/2
            + k**2*log2(e)/(4n)

    The quadratic term is the explicit total-bits form of the residual
    correction, kept so the inequality can be used verbatim against measured
    code lengths.
    """
    _check_bits_args(n, k)
    return (
        k / 2.0 * (math.log2(n) - 3.0 * math.log2(k))
        + (19.0 / 12.0) * LOG2E * k
        - 0.5 * math.log2(n)
        + LOG2E * k * k / (4.0 * n)
    )


def known_k_bits_bound_frequent(n: int, k: int) -> float:
    """Variant of :func:`known_k_bits_bound` for letters that all occur more
    than a fixed number of times: the linear coefficient drops from 19/12 to
    1.5, which moves the zero crossing from ``e**(19/18) * n**(1/3)`` down to
    ``e * n**(1/3)`` and puts the maximum at ``k = n**(1/3)``."""
    _check_bits_args(n, k)
    return (
        k / 2.0 * (math.log2(n) - 3.0 * math.log2(k))
        + 1.5 * LOG2E * k
        - 0.5 * math.log2(n)
        + LOG2E * k * k / (4.0 * n)
    )


def mixture_bits_bound(n: int, k: int) -> float:
    """Total-bits ceiling for the coder that mixes over candidate alphabet
    sizes with uniform weight.

    Differs from :func:`known_k_bits_bound` only in the third term:
    ``+log2(n**2/k**3)/2`` replaces ``-log2(n)/2``. That is the price of the
    mixing weight plus running the per-size assignment with one extra
    candidate index, and it flips sign at ``k = n**(2/3)`` (at ``k = n`` the
    term is ``log2(1/n)/2 < 0``).
    """
    _check_bits_args(n, k)
    return (
        k / 2.0 * (math.log2(n) - 3.0 * math.log2(k))
        + (19.0 / 12.0) * LOG2E * k
        + 0.5 * (2.0 * math.log2(n) - 3.0 * math.log2(k))
        + LOG2E * k * k / (4.0 * n)
    )


def _unknown_k_bits(n: int, k: int, eps: float, linear_coeff: float) -> float:
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie strictly between 0 and 1")
    return (
        k / 2.0 * (math.log2(n) - 3.0 * math.log2(k))
        + (linear_coeff - eps) * LOG2E * k
        - 0.5 * math.log2(n)
        + k ** (1.0 - eps) / 2.0 * (1.0 + math.log2(n) - math.log2(k))
        + eps * k * math.log2(k)
        + LOG2E * k * k / (4.0 * n)
    )


def unknown_k_bits_bound(n: int, k: int, eps: float) -> float:
    """Total-bits ceiling for the fixed-per-symbol-complexity coder that
    learns the alphabet size as it goes.

    Two terms are added on top of :func:`known_k_bits_bound`:
    ``(k**(1-eps)/2) * log2(2n/k)`` for the innovation mass the estimator
    reserves, and ``eps*k*log2(k)`` from tilting that mass; the linear
    coefficient also drops to ``19/12 - eps``. For ``k`` large and ``eps``
    small the additions vanish relative to the shared terms, but for
    moderate ``k > n**(1/3)`` they push the worst-case letter count well
    above ``n**(1/3)``.
    """
    _check_bits_args(n, k)
    return _unknown_k_bits(n, k, eps, 19.0 / 12.0)


def unknown_k_bits_bound_frequent(n: int, k: int, eps: float) -> float:
    """Frequent-letters variant of :func:`unknown_k_bits_bound` (linear
    coefficient ``1.5 - eps``), the form whose finite-``n`` maximizer sits
    near ``n**0.44`` for ``n = 10**6`` and ``eps = 0.1`` and approaches
    ``n**(0.5/(1.5-eps))`` from above as ``n`` grows."""
    _check_bits_args(n, k)
    return _unknown_k_bits(n, k, eps, 1.5)


def entropy_upper_bound(n: int, k_prime: int, eps: float, h_iid: float) -> float:
    """Per-symbol ceiling on the entropy of the pattern process given the
    letter-level entropy ``h_iid``.

    Applies when at least ``k_prime`` distinct letters occur with probability
    at least ``1 - eps``. Below the threshold ``e**(19/18) * n**(1/3)`` the
    ceiling is just ``h_iid``; above it, discarding letter identities
    provably saves ``(1-eps) * 1.5 * (k'/n) * log2(k'/threshold)`` bits per
    symbol. The dropped correction is ``O((k'**2 + n*log n)/n**2)`` and is
    not evaluated.
    """
    if n < 2:
        raise ValueError("sequence length must be at least 2")
    if k_prime < 1:
        raise ValueError("k_prime must be positive")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie strictly between 0 and 1")
    threshold = math.e ** (19.0 / 18.0) * n ** (1.0 / 3.0)
    if k_prime <= threshold:
        return h_iid
    saving = (1.0 - eps) * 1.5 * (k_prime / n) * math.log2(k_prime / threshold)
    return h_iid - saving


def grid_representation_costs(
    n: int, k: int, eps: float, beta: float, delta: float | None = None
) -> tuple[float, float]:
    """Bits to describe a quantized estimate split at grid index ``beta``.

    The first ``beta`` grid points each record a letter multiplicity (up to
    ``log2(k)`` bits apiece); the remaining points hold at most
    ``n**(1+eps)/beta**2`` components, each addressed with a full grid index.
    Returns ``(cost, optimized)`` where::

        cost      = (1+delta)*beta*log2(k)
                    + (1+delta)*(n**(1+eps)/(2*beta**2))*log2(n)
        optimized = (1+delta)*1.5*n**((1+eps)/3)
                    * log2(n)**(1/3) * log2(k)**(2/3)

    ``optimized`` is the closed-form minimum of ``cost`` over ``beta``, which
    is how a fixed ``O(n**((1+eps)/3))`` description cost is reached even for
    alphabets as large as ``n``. The slack factor ``delta`` must be at least
    ``eps``; by default it is taken equal to ``eps``, the limiting value.
    """
    if n < 2:
        raise ValueError("sequence length must be at least 2")
    if k < 2:
        raise ValueError("need at least two letters")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie strictly between 0 and 1")
    if delta is None:
        delta = eps
    if delta < eps:
        raise ValueError("delta must be at least eps")
    grid_points = math.sqrt(n ** (1.0 + eps))
    if not 1.0 <= beta <= grid_points:
        raise ValueError("beta must lie between 1 and the grid size")
    slack = 1.0 + delta
    cost = slack * beta * math.log2(k) + slack * n ** (1.0 + eps) / (
        2.0 * beta * beta
    ) * math.log2(n)
    optimized = (
        slack
        * 1.5
        * n ** ((1.0 + eps) / 3.0)
        * math.log2(n) ** (1.0 / 3.0)
        * math.log2(k) ** (2.0 / 3.0)
    )
    return cost, optimized


def count_integer_ball(n: int, eps: float, k: int) -> int:
    """Exact number of positive integer ``(k-1)``-vectors whose squared norm
    is at most ``n**(1-eps)``.

    This is the size of the parameter grid the distinguishability argument
    packs sources into. Counted by convolving sum-of-two-squares tallies
    dimension by dimension, so the result is exact integer arithmetic rather
    than a float estimate. Guarded to ``k <= 6`` and ``n**(1-eps) <= 10**4``
    to keep the tally arrays small.
    """
    if k < 2:
        raise ValueError("need at least two letters for a nonempty grid")
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    if k > _BALL_MAX_K:
        raise ValueError("exact lattice count is guarded to k <= 6")
    radius_sq = n ** (1.0 - eps)
    if radius_sq > _BALL_MAX_RADIUS_SQ:
        raise ValueError("exact lattice count is guarded to n**(1-eps) <= 10**4")
    budget = int(math.floor(radius_sq))
    dims = k - 1
    if budget < dims:
        return 0
    tally = np.zeros(budget + 1, dtype=np.int64)
    for b in range(1, math.isqrt(budget) + 1):
        tally[b * b] = 1
    for _ in range(dims - 1):
        acc = np.zeros(budget + 1, dtype=np.int64)
        for b in range(1, math.isqrt(budget) + 1):
            sq = b * b
            acc[sq:] += tally[:-sq]
        tally = acc
    return int(tally.sum())


def ball_volume_lower_bound(n: int, eps_prime: float, k: int) -> float:
    """Volume floor for :func:`count_integer_ball`: one orthant's share,
    ``2**-(k-1)``, of the ``(k-1)``-ball of radius ``sqrt(n**(1-eps_prime))``.

    The tilt ``eps_prime`` must exceed the ``eps`` used for the count, which
    shrinks the ball and absorbs the boundary cells the orthant scaling
    over-credits. Computed in the log domain with exact ``lgamma``, covering
    both parities of ``k`` in one formula.
    """
    if n < 2:
        raise ValueError("sequence length must be at least 2")
    if k < 2:
        raise ValueError("need at least two letters")
    if not 0.0 < eps_prime < 1.0:
        raise ValueError("eps_prime must lie strictly between 0 and 1")
    d = k - 1
    log_radius = 0.5 * (1.0 - eps_prime) * math.log(n)
    log_vol = (
        d / 2.0 * math.log(math.pi) + d * log_radius - math.lgamma(d / 2.0 + 1.0)
    )
    return math.exp(log_vol - d * math.log(2.0))


def pattern_space_volume(k: int, *, log2: bool = False) -> float:
    """Volume of the ordered-parameter region, ``1/((k-1)! * k!)``.

    One factorial removes the simplex normalization, the other the labelling
    permutations. The plain value sinks into subnormals around ``k = 86`` and
    underflows to zero past roughly ``k = 104``; pass ``log2=True`` to get
    the base-2 log instead, computed with ``lgamma`` so it stays finite for
    any ``k``.
    """
    if k < 2:
        raise ValueError("need at least two letters")
    log2_volume = -(math.lgamma(k) + math.lgamma(k + 1)) * LOG2E
    if log2:
        return log2_volume
    if k <= 85:
        return 1.0 / (math.factorial(k - 1) * math.factorial(k))
    return 2.0**log2_volume


def pattern_space_volume_mc(k: int, samples: int, seed: int) -> tuple[float, float]:
    """Monte-Carlo cross-check of :func:`pattern_space_volume`.

    Draws uniform points on the probability simplex as normalized
    exponentials; normalization never reorders coordinates, so the
    non-decreasing test runs on the raw draws. The sorted fraction times the
    simplex volume ``1/(k-1)!`` estimates the region volume. Returns the
    estimate together with its binomial standard error on the same scale.
    """
    if k < 2:
        raise ValueError("need at least two letters")
    if samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    hits = 0
    remaining = samples
    chunk_rows = max(1, 4_000_000 // k)
    while remaining > 0:
        rows = min(remaining, chunk_rows)
        draws = rng.standard_exponential((rows, k))
        hits += int(np.count_nonzero(np.all(draws[:, 1:] >= draws[:, :-1], axis=1)))
        remaining -= rows
    fraction = hits / samples
    simplex = 1.0 / math.factorial(k - 1)
    estimate = fraction * simplex
    std_error = math.sqrt(fraction * (1.0 - fraction) / samples) * simplex
    return estimate, std_error


def sphere_count_bound(n: int, k: int, eps: float) -> float:
    """Log2 of how many pairwise distinguishable sources fit in the ordered
    parameter region, in the expanded closed form.

    The count comes from packing radius ``n**(-0.5*(1-eps))`` balls at
    density ``2**-(k-1)`` into the region measured by
    :func:`pattern_space_volume`. Expanding the factorials gives

        (1-eps)*(k-1)/2*log2(n) - (k-1)/2*log2(k**3)
            - (k-1)/2*log2(8*pi/e**3) - 1.5*log2(k) + 0.5*log2(e**3/(4*pi))

    which peaks at ``k = 0.5*(n**(1-eps)/pi)**(1/3)`` and goes negative (the
    packing argument stops giving information) for letter counts a constant
    factor above that. The expansion error is ``O(1/k)`` and is largest at
    ``k = 2``, where it overstates :func:`sphere_count_bound_direct` by about
    0.18 bits.
    """
    if n < 2:
        raise ValueError("sequence length must be at least 2")
    if k < 2:
        raise ValueError("need at least two letters")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie strictly between 0 and 1")
    d = k - 1
    return (
        (1.0 - eps) * d / 2.0 * math.log2(n)
        - d / 2.0 * 3.0 * math.log2(k)
        - d / 2.0 * math.log2(8.0 * math.pi / math.e**3)
        - 1.5 * math.log2(k)
        + 0.5 * math.log2(math.e**3 / (4.0 * math.pi))
    )


def sphere_count_bound_direct(n: int, k: int, eps: float) -> float:
    """Same packing count as :func:`sphere_count_bound` but taken straight
    from the volume ratio with exact ``lgamma`` factorials: region volume
    over ball volume, times the ``2**-(k-1)`` packing density."""
    if n < 2:
        raise ValueError("sequence length must be at least 2")
    if k < 2:
        raise ValueError("need at least two letters")
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie strictly between 0 and 1")
    d = k - 1
    log2_radius = -0.5 * (1.0 - eps) * math.log2(n)
    log2_ball = (
        d / 2.0 * math.log2(math.pi)
        + d * log2_radius
        - math.lgamma(d / 2.0 + 1.0) * LOG2E
    )
    log2_region = pattern_space_volume(k, log2=True)
    return log2_region - log2_ball - d
