"""Two-part pattern code: a quantized parameter header plus the pattern body.

The encoder estimates an ordered parameter vector for the observed pattern,
snaps all but the largest component onto the quadratic grid tau_b = b^2 / S
(S = n^(1+eps)), transmits the grid indices as Elias-delta coded gaps, and
then codes the pattern under the snapped parameters. A competing candidate
reuses the integer-partition type code instead. One selector bit announces
the winner, so the emitted length is exactly one bit plus the shorter
candidate.

Quadratic spacing matches quantization error to estimation error: the grid
step near tau is about 2*sqrt(tau/S), the same order as the sampling
fluctuation of an empirical frequency near tau. Cheaper headers would blur
the parameters faster than the data pins them down; finer ones would spend
bits the pattern cannot pay back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from patternzip.coder import (
    BitReader,
    BitStream,
    CoderError,
    arith_decode,
    arith_encode,
    elias_delta_decode,
    elias_delta_encode,
)
from patternzip.exact import (
    MAX_MODEL_ALPHABET,
    MAX_PARTITION_N,
    PatternSourceModel,
    pattern_log2_prob,
    pattern_ml_estimate,
    type_code_decode,
    type_code_encode,
)
from patternzip.patterns import is_valid_pattern, occurrence_counts

# The maximum-likelihood estimate is only worth its optimizer time for small
# alphabets; past this the ordered empirical frequencies serve as psi-hat.
ML_ESTIMATE_MAX_K = 10
ML_ESTIMATE_MIN_N = 256

# Exact payload coding runs the forward-backward injection scans, whose cost
# per pattern is about n * k * 2^k subset updates. Past these budgets the
# encoder switches to the memoryless surrogate; the choice depends only on
# (n, k), which the decoder knows before the payload starts.
_EXACT_STEP_CELLS = 120_000
_EXACT_SCAN_OPS = 2_000_000_000


@dataclass(frozen=True)
class GridSpec:
    """Quadratic quantization grid tau_b = b^2 / scale over (0, 1].

    ``direction`` records which exponent built ``scale``: "upper" uses
    n^(1+eps) (parameter headers), "lower" uses n^(1-eps) (packing
    arguments in the bounds module). ``points`` is the largest index whose
    grid point still lies in (0, 1].
    """

    n: int
    eps: float
    direction: str
    scale: float
    points: int

    def tau(self, b: int) -> float:
        """Grid point with index b >= 1."""
        if b < 1:
            raise ValueError("grid indices start at 1")
        return (b * b) / self.scale

    def spacing(self, b: int) -> float:
        """Gap tau_b - tau_{b-1} = 2(b - 1/2) / scale."""
        if b < 1:
            raise ValueError("grid indices start at 1")
        return (2 * b - 1) / self.scale

    def bracket(self, x: float) -> int:
        """Largest b >= 0 with tau_b <= x, treating tau_0 = 0."""
        if x < 0:
            raise ValueError("grid only covers nonnegative values")
        b = int(math.floor(math.sqrt(x * self.scale)))
        # One-ulp repair; the float sqrt can land on either side of an
        # exact grid point.
        while (b + 1) * (b + 1) <= x * self.scale:
            b += 1
        while b >= 1 and b * b > x * self.scale:
            b -= 1
        return b


def make_grid(n: int, eps: float, direction: str = "upper") -> GridSpec:
    if n < 2:
        raise ValueError("grid needs n >= 2")
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    if direction not in ("lower", "upper"):
        raise ValueError("direction must be 'lower' or 'upper'")
    exponent = 1.0 + eps if direction == "upper" else 1.0 - eps
    scale = float(n) ** exponent
    points = int(math.floor(math.sqrt(scale)))
    while (points + 1) * (points + 1) <= scale:
        points += 1
    while points > 1 and points * points > scale:
        points -= 1
    return GridSpec(n=n, eps=eps, direction=direction, scale=scale, points=points)


@dataclass(frozen=True)
class QuantizedParams:
    """Snapped parameter vector: k-1 grid indices plus the implied residual.

    ``phi[i] = tau(indices[i])`` for i < k-1 and ``phi[-1]`` carries the
    leftover mass, so the vector always sums to one. The head is
    non-decreasing by construction; the residual normally tops it but can
    dip below the last head component by up to one grid spacing when the
    input is nearly uniform.
    """

    phi: np.ndarray
    indices: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.indices) + 1


def quantize_ordered(psi, grid: GridSpec) -> QuantizedParams:
    """Snap an ordered parameter vector onto a grid, head components first.

    Each of the k-1 smallest components moves to one of the two grid points
    bracketing it, chosen greedily to keep the running sum of displacements
    as close to zero as possible (ties go to the lower point); the picks are
    then sorted. Sorting changes neither the running sum nor any pick's
    bracket membership, because the bracket intervals are themselves
    ordered, so the head comes out non-decreasing while the running sum
    keeps the one-spacing greedy guarantee. The largest component absorbs
    the leftover, so its error is the final running sum rather than a sum
    of k-1 worst cases. Components below the first grid point snap up to it
    and the running sum carries the excess.
    """
    psi = np.asarray(psi, dtype=float).ravel()
    k = psi.size
    if k < 2:
        raise ValueError("quantization needs at least two components")
    if psi.min() <= 0.0:
        raise ValueError("components must be positive")
    if np.any(np.diff(psi) < -1e-12):
        raise ValueError("components must be sorted ascending")
    if abs(float(psi.sum()) - 1.0) > 1e-9:
        raise ValueError("components must sum to one")

    picks: list[int] = []
    cum = 0.0
    for i in range(k - 1):
        x = float(psi[i])
        lo = grid.bracket(x)
        if lo == 0:
            cands = (1,)
        elif lo >= grid.points:
            cands = (grid.points,)
        else:
            cands = (lo, lo + 1)
        best = min(cands, key=lambda b: (abs(cum + x - grid.tau(b)), b))
        picks.append(best)
        cum += x - grid.tau(best)

    indices = sorted(picks)
    head = [grid.tau(b) for b in indices]
    residual = 1.0 - math.fsum(head)
    if residual <= 0.0:
        raise ValueError("quantized head left no mass for the largest component")
    phi = np.array(head + [residual])
    return QuantizedParams(phi=phi, indices=tuple(indices))


def encode_quantized(q: QuantizedParams, grid: GridSpec, out: BitStream | None = None) -> BitStream:
    """Append the grid indices as Elias-delta codes of (gap + 1).

    The first gap is measured from the virtual index 0, so equal and
    adjacent indices cost a single bit and four bits respectively.
    """
    if out is None:
        out = BitStream()
    prev = 0
    for b in q.indices:
        if b < max(prev, 1) or b > grid.points:
            raise ValueError("grid indices must be non-decreasing and on the grid")
        elias_delta_encode(b - prev + 1, out)
        prev = b
    return out


def decode_quantized(reader: BitReader, grid: GridSpec, k: int) -> QuantizedParams:
    """Read k-1 gap codes and rebuild the snapped vector."""
    if k < 2:
        raise ValueError("quantized vectors have at least two components")
    indices: list[int] = []
    prev = 0
    for _ in range(k - 1):
        gap = elias_delta_decode(reader) - 1
        b = prev + gap
        if b < 1:
            raise CoderError("grid index before the first point")
        if b > grid.points:
            raise CoderError("grid index past the last point")
        indices.append(b)
        prev = b
    head = [grid.tau(b) for b in indices]
    residual = 1.0 - math.fsum(head)
    if residual <= 0.0:
        raise CoderError("quantized components exceed the total mass")
    phi = np.array(head + [residual])
    return QuantizedParams(phi=phi, indices=tuple(indices))


def quantization_cost(pattern, psi, phi) -> float:
    """Per-symbol bits lost by coding under phi instead of psi.

    log2(P_psi / P_phi) / n; negative when the snapped vector happens to fit
    the pattern better than the estimate it came from.
    """
    pattern = [int(j) for j in pattern]
    if not pattern:
        raise ValueError("empty pattern")
    a = pattern_log2_prob(psi, pattern)
    b = pattern_log2_prob(phi, pattern)
    return (a - b) / len(pattern)


class SurrogatePatternModel:
    """Memoryless stand-in for the exact pattern process under a fixed phi.

    A new index carries the total unassigned mass and claims the largest
    unassigned component; indices already seen keep their component's
    probability unchanged. Step distributions depend only on how many
    indices have appeared, never on their counts, so pushes are O(1) and
    any alphabet the range coder can hold is fine. The price is a looser
    fit than the exact conditionals, which is why the encoder only reaches
    for it past the exact-payload budget.
    """

    def __init__(self, phi):
        phi = np.asarray(phi, dtype=float).ravel()
        if phi.size == 0 or float(phi.min()) <= 0.0:
            raise ValueError("phi must be positive")
        if abs(float(phi.sum()) - 1.0) > 1e-9:
            raise ValueError("phi must sum to one")
        self._pool: list[float] = sorted(phi.tolist(), reverse=True)
        self._assigned: list[float] = []
        self.t = 0
        self._table: np.ndarray | None = None

    @property
    def C(self) -> int:
        return len(self._assigned)

    @property
    def d(self) -> int:
        return len(self._assigned) + len(self._pool)

    def clone(self) -> "SurrogatePatternModel":
        other = SurrogatePatternModel.__new__(SurrogatePatternModel)
        other._pool = list(self._pool)
        other._assigned = list(self._assigned)
        other.t = self.t
        other._table = None
        return other

    def _check_slot(self, j: int) -> None:
        if not 1 <= j <= self.C + 1:
            raise ValueError(f"slot {j} out of range")

    def step_distribution(self) -> np.ndarray:
        return np.array(self._assigned + [math.fsum(self._pool)])

    def conditional(self, j: int) -> float:
        self._check_slot(j)
        return float(self.step_distribution()[j - 1])

    def push(self, j: int) -> None:
        self._check_slot(j)
        if j == self.C + 1:
            if not self._pool:
                raise ValueError("alphabet exhausted")
            self._assigned.append(self._pool.pop(0))
            self._table = None
        self.t += 1

    # Integer coder view, quantized the same way as the exact model so the
    # range coder's overhead accounting carries over.

    def _freq_table(self) -> np.ndarray:
        if self._table is None:
            probs = self.step_distribution()
            probs = probs / probs.sum()
            scale = min((1 << 32) - (1 << 16), (1 << 32) - 2 * (self.C + 2))
            f = np.maximum(1, np.round(probs * scale)).astype(np.int64)
            f[probs <= 0] = 0
            self._table = np.concatenate([[0], np.cumsum(f)])
        return self._table

    def total_freq(self) -> int:
        return int(self._freq_table()[-1])

    def symbol_range(self, j: int) -> tuple[int, int]:
        self._check_slot(j)
        cum = self._freq_table()
        lo, hi = int(cum[j - 1]), int(cum[j])
        if hi <= lo:
            raise ValueError("zero-mass slot requested")
        return lo, hi

    def locate(self, v: int) -> int:
        cum = self._freq_table()
        return int(np.searchsorted(cum, v, side="right"))


def _exact_payload_ok(n: int, k: int) -> bool:
    if k > MAX_MODEL_ALPHABET:
        return False
    return n * k * k <= _EXACT_STEP_CELLS and n * k * (1 << k) <= _EXACT_SCAN_OPS


def _payload_model(phi, n: int):
    if _exact_payload_ok(n, len(phi)):
        return PatternSourceModel(phi)
    return SurrogatePatternModel(phi)


def _estimates(pattern, counts: np.ndarray, n: int) -> list[np.ndarray]:
    """Candidate psi-hat vectors, best first: pattern-ML when affordable,
    ordered empirical frequencies always.

    Below ML_ESTIMATE_MIN_N the quantization grid is too coarse for the ML
    candidate to land on a different grid point than the empirical one, so
    the optimizer run is skipped.
    """
    empirical = np.sort(counts.astype(float)) / n
    out = []
    if counts.size <= ML_ESTIMATE_MAX_K and n >= ML_ESTIMATE_MIN_N:
        theta, _ = pattern_ml_estimate(pattern, restarts=1, maxiter=200)
        out.append(theta)
    out.append(empirical)
    return out


def _emit_quant(pattern, n: int, grid: GridSpec, khat: int, q: QuantizedParams) -> BitStream:
    bs = elias_delta_encode(khat)
    encode_quantized(q, grid, out=bs)
    bs.extend(arith_encode(_payload_model(q.phi, n), pattern))
    return bs


def _flat_quantization(khat: int, grid: GridSpec) -> QuantizedParams:
    """All-components-at-tau_b fallback with b = bracket(1/k); its head mass
    stays below (k-1)/k, so the residual is always positive."""
    b = max(grid.bracket(1.0 / khat), 1)
    head = [grid.tau(b)] * (khat - 1)
    phi = np.array(head + [1.0 - math.fsum(head)])
    return QuantizedParams(phi=phi, indices=(b,) * (khat - 1))


def _candidate_streams(pattern: list[int], n: int, eps: float) -> list[tuple[int, BitStream]]:
    """All branch encodings of a pattern as (selector, bits) pairs.

    Selector 0 is the quantized-parameter branch, selector 1 the
    integer-partition type branch. At least one candidate always exists.
    """
    counts = np.asarray(occurrence_counts(pattern), dtype=np.int64)
    khat = counts.size
    candidates: list[tuple[int, BitStream]] = []

    type_ok = (
        n <= MAX_PARTITION_N
        and khat <= MAX_MODEL_ALPHABET
        and _exact_payload_ok(n, khat)
    )
    if type_ok:
        candidates.append((1, type_code_encode(pattern)))

    if khat == 1:
        if not type_ok:
            # Degenerate header: the letter count alone pins the pattern.
            candidates.append((0, elias_delta_encode(1)))
        return candidates

    grid = make_grid(n, eps, "upper")
    seen: set[tuple[int, ...]] = set()
    for psi in _estimates(pattern, counts, n):
        try:
            q = quantize_ordered(psi, grid)
        except ValueError:
            continue
        if q.indices in seen:
            continue
        seen.add(q.indices)
        candidates.append((0, _emit_quant(pattern, n, grid, khat, q)))
    if not candidates:
        q = _flat_quantization(khat, grid)
        candidates.append((0, _emit_quant(pattern, n, grid, khat, q)))
    return candidates


def twopart_encode(pattern, n: int, eps: float) -> BitStream:
    """Code a pattern as selector bit + best branch; see the module docstring."""
    pattern = [int(j) for j in pattern]
    if not pattern:
        raise ValueError("empty pattern")
    if not is_valid_pattern(pattern):
        raise ValueError("not a valid pattern")
    if n != len(pattern):
        raise ValueError("n must equal the pattern length")
    selector, bits = min(
        _candidate_streams(pattern, n, eps),
        key=lambda c: (c[1].bit_length, c[0]),
    )
    out = BitStream()
    out.append_bit(selector)
    out.extend(bits)
    return out


def twopart_decode(bits, n: int, eps: float) -> list[int]:
    """Invert :func:`twopart_encode` given the pattern length and eps."""
    if n < 1:
        raise ValueError("n must be positive")
    reader = bits if isinstance(bits, BitReader) else BitReader(bits.to_bytes(), bits.bit_length)
    if reader.read_bit() == 1:
        return type_code_decode(reader, n)
    khat = elias_delta_decode(reader)
    if khat > n:
        raise CoderError("letter count exceeds the pattern length")
    if khat == 1:
        return [1] * n
    q = decode_quantized(reader, make_grid(n, eps, "upper"), khat)
    return arith_decode(_payload_model(q.phi, n), reader, n)
