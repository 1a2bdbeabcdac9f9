"""Sequential probability assignments over patterns.

The add-half estimator over a known alphabet, its pattern counterparts for
known and unknown alphabet size, a mixture over alphabet sizes, and a
generalized form with pluggable new-index mass. Every model walks a sequence
one step at a time and exposes

* float conditionals (:meth:`conditional`, :meth:`step_distribution`),
* exact rationals where the definition is rational (``conditional_fraction``),
* an integer-frequency view (``total_freq`` / ``symbol_range`` / ``locate``)
  consumed verbatim by the range coder, so encoder and decoder always agree.

Slot convention for pattern models: slots 1..C are the already-seen indices
in order of first occurrence, slot C+1 is the new-index event.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from patternzip.patterns import iid_ml, pattern_prefix_stats

LOG2E = math.log2(math.e)

# Scale for per-step integer frequencies where the model's conditionals are
# not exact dyadic rationals. Leaves headroom below the range coder's 2^32
# total-frequency capacity for rounding.
_FREQ_SCALE = (1 << 32) - (1 << 16)
_FREQ_CAP = 1 << 32


class _Fenwick:
    """Prefix sums over slot counts with an affine coder-range search."""

    def __init__(self, capacity: int = 8):
        self._n = max(1, capacity)
        self._tree = [0] * (self._n + 1)

    def ensure(self, size: int) -> None:
        if size <= self._n:
            return
        vals = [self.prefix(i) - self.prefix(i - 1) for i in range(1, self._n + 1)]
        self._n = max(size, 2 * self._n)
        self._tree = [0] * (self._n + 1)
        for i, v in enumerate(vals, 1):
            if v:
                self.add(i, v)

    def add(self, i: int, delta: int) -> None:
        while i <= self._n:
            self._tree[i] += delta
            i += i & (-i)

    def prefix(self, i: int) -> int:
        s = 0
        while i > 0:
            s += self._tree[i]
            i -= i & (-i)
        return s

    def descend_affine(self, a: int, b: int, v: int, jmax: int) -> int:
        """Largest j in [0, jmax] with a*(2*prefix(j) + j) + b*j <= v."""
        j = 0
        acc = 0
        bit = 1 << (self._n.bit_length() - 1)
        while bit:
            nxt = j + bit
            if nxt <= self._n and nxt <= jmax:
                c = acc + self._tree[nxt]
                if a * (2 * c + nxt) + b * nxt <= v:
                    j = nxt
                    acc = c
            bit >>= 1
        return j


class _SlotModelBase:
    """Shared bookkeeping: per-index counts, position, Fenwick tree."""

    def __init__(self):
        self.counts: list[int] = []
        self.t = 0
        self._fen = _Fenwick()

    @property
    def C(self) -> int:
        return len(self.counts)

    def clone(self):
        """Independent deep copy (decoder-symmetry tests)."""
        return copy.deepcopy(self)

    def _check_slot(self, j: int) -> None:
        if not 1 <= j <= self.C + 1:
            raise ValueError(f"slot {j} out of range with {self.C} indices seen")

    def _advance(self, j: int) -> None:
        if j == self.C + 1:
            self._fen.ensure(j)
            self.counts.append(1)
        else:
            self.counts[j - 1] += 1
        self._fen.add(j, 1)
        self.t += 1

    # --- integer-frequency view -------------------------------------------
    # Subclasses provide _freq_profile() -> (a, b, new_freq); the cumulative
    # frequency of slots 1..j is then a*(2*prefix(j) + j) + b*j, existing
    # slot j holds a*(2*counts[j-1] + 1) + b, and the new-index slot holds
    # new_freq + b.

    def _freq_profile(self) -> tuple[int, int, int]:
        raise NotImplementedError

    def total_freq(self) -> int:
        a, b, new = self._freq_profile()
        return a * (2 * self.t + self.C) + b * (self.C + 1) + new

    def symbol_range(self, j: int) -> tuple[int, int]:
        self._check_slot(j)
        a, b, new = self._freq_profile()
        if j == self.C + 1:
            lo = a * (2 * self.t + self.C) + b * self.C
            hi = lo + new + b
        else:
            lo = a * (2 * self._fen.prefix(j - 1) + (j - 1)) + b * (j - 1)
            hi = lo + a * (2 * self.counts[j - 1] + 1) + b
        if hi <= lo:
            raise ValueError("zero-mass slot requested")
        return lo, hi

    def locate(self, v: int) -> int:
        a, b, new = self._freq_profile()
        existing_total = a * (2 * self.t + self.C) + b * self.C
        if v >= existing_total:
            return self.C + 1
        return self._fen.descend_affine(a, b, v, self.C) + 1


@dataclass
class CodeLengthReport:
    """Code length and the pattern's modified redundancy."""

    bits: float
    neg_log_pml: float
    modified_redundancy: float
    n: int
    k: int


class KTSequenceModel(_SlotModelBase):
    """Add-half sequential estimator over a fixed alphabet {1..k}.

    Conditional for symbol a after t observations: (n_a + 1/2) / (t + k/2).
    """

    def __init__(self, k: int):
        if k < 1:
            raise ValueError("k must be >= 1")
        super().__init__()
        self.k = k
        self.counts = [0] * k
        self._fen.ensure(k)

    def _check_slot(self, j: int) -> None:
        if not 1 <= j <= self.k:
            raise ValueError(f"symbol {j} outside alphabet of size {self.k}")

    def conditional(self, a: int) -> float:
        self._check_slot(a)
        return (self.counts[a - 1] + 0.5) / (self.t + self.k / 2)

    def conditional_fraction(self, a: int) -> Fraction:
        self._check_slot(a)
        return Fraction(2 * self.counts[a - 1] + 1, 2 * self.t + self.k)

    def step_distribution(self) -> np.ndarray:
        return (np.asarray(self.counts) + 0.5) / (self.t + self.k / 2)

    def push(self, a: int) -> None:
        self._check_slot(a)
        self.counts[a - 1] += 1
        self._fen.add(a, 1)
        self.t += 1

    def _freq_profile(self):
        return 1, 0, 0

    def total_freq(self) -> int:
        return 2 * self.t + self.k

    def symbol_range(self, a: int) -> tuple[int, int]:
        self._check_slot(a)
        lo = 2 * self._fen.prefix(a - 1) + (a - 1)
        return lo, lo + 2 * self.counts[a - 1] + 1

    def locate(self, v: int) -> int:
        return self._fen.descend_affine(1, 0, v, self.k) + 1


class KnownKPatternModel(_SlotModelBase):
    """Pattern coder for a known alphabet size k.

    Existing index j: (n_j + 1/2) / (t + k/2); the new-index event collects
    the mass of all k - C unseen letters: ((k - C)/2) / (t + k/2).
    """

    def __init__(self, k: int):
        if k < 1:
            raise ValueError("k must be >= 1")
        super().__init__()
        self.k = k

    def conditional(self, j: int) -> float:
        self._check_slot(j)
        den = self.t + self.k / 2
        if j == self.C + 1:
            return (self.k - self.C) / 2 / den
        return (self.counts[j - 1] + 0.5) / den

    def conditional_fraction(self, j: int) -> Fraction:
        self._check_slot(j)
        if j == self.C + 1:
            return Fraction(self.k - self.C, 2 * self.t + self.k)
        return Fraction(2 * self.counts[j - 1] + 1, 2 * self.t + self.k)

    def step_distribution(self) -> np.ndarray:
        den = self.t + self.k / 2
        ex = (np.asarray(self.counts) + 0.5) / den
        return np.r_[ex, (self.k - self.C) / 2 / den]

    def push(self, j: int) -> None:
        self._check_slot(j)
        if j == self.C + 1 and self.C == self.k:
            raise ValueError("alphabet exhausted")
        self._advance(j)

    def _freq_profile(self):
        return 1, 0, self.k - self.C


class UnknownKPatternModel(_SlotModelBase):
    """Pattern coder needing no alphabet size.

    The new-index event gets mass (C+1)^(1-eps)/2 against denominator
    t + C/2 + (C+1)^(1-eps)/2, so innovation stays plausible however many
    indices have appeared; eps trades new-index cost against existing-index
    cost.
    """

    def __init__(self, eps: float):
        if not 0 < eps < 1:
            raise ValueError("eps must be in (0, 1)")
        super().__init__()
        self.eps = eps

    def _chi2(self) -> float:
        # Twice the new-index numerator: (C+1)^(1-eps).
        return (self.C + 1) ** (1.0 - self.eps)

    def conditional(self, j: int) -> float:
        self._check_slot(j)
        chi2 = self._chi2()
        den = 2 * self.t + self.C + chi2
        if j == self.C + 1:
            return chi2 / den
        return (2 * self.counts[j - 1] + 1) / den

    def step_distribution(self) -> np.ndarray:
        chi2 = self._chi2()
        den = 2 * self.t + self.C + chi2
        return np.r_[(2 * np.asarray(self.counts) + 1) / den, chi2 / den]

    def push(self, j: int) -> None:
        self._check_slot(j)
        self._advance(j)

    def _freq_profile(self):
        a = 1 << max(0, 30 - (2 * self.t + self.C + 2).bit_length())
        new = max(1, round(a * self._chi2()))
        return a, 0, new


class MixturePatternModel(_SlotModelBase):
    """Mixture over known-size pattern coders for sizes j = 2..min(n, j_max).

    Component j behaves like the known-size coder while j exceeds the number
    of distinct indices seen, and predicts uniformly over the C existing
    indices plus the new-index event once the pattern has outgrown it.
    Posterior component weights are carried explicitly, so the per-step cost
    is O(active components).

    The cap keeps total work near-linear for long inputs; the uncapped
    mixture (j_max >= n) is what the code-length guarantees are stated for,
    and stays practical up to n of a few times 10^5.

    With exact=True all weights are big rationals and
    :meth:`conditional_fraction` is available (slow; for small-n tests).
    """

    def __init__(self, n: int, j_max: int | None = None, exact: bool = False):
        if n < 2:
            raise ValueError("n must be >= 2")
        super().__init__()
        self.n = n
        cap = min(n, 4096) if j_max is None else min(n, j_max)
        if cap < 2:
            raise ValueError("j_max leaves no components")
        self.j_max = cap
        self.exact = exact
        self._J = np.arange(2, cap + 1, dtype=np.int64)
        self._w = np.full(self._J.size, 1.0 / self._J.size)
        self._wf: list[Fraction] | None = None
        if exact:
            self._wf = [Fraction(1)] * self._J.size

    # --- float aggregates ---------------------------------------------------

    def _aggregates(self) -> tuple[float, float, float]:
        """(s_kt, p_uni_slot, p_new_kt) under current posterior weights."""
        C, t = self.C, self.t
        kt = self._J > C
        w_kt = self._w[kt]
        den = t + 0.5 * self._J[kt]
        s_kt = float(np.sum(w_kt / den))
        p_new_kt = float(np.sum(w_kt * (0.5 * (self._J[kt] - C)) / den))
        p_uni = float(np.sum(self._w[~kt])) / (C + 1)
        return s_kt, p_uni, p_new_kt

    def conditional(self, j: int) -> float:
        self._check_slot(j)
        s_kt, p_uni, p_new_kt = self._aggregates()
        if j == self.C + 1:
            return p_new_kt + p_uni
        return (self.counts[j - 1] + 0.5) * s_kt + p_uni

    def step_distribution(self) -> np.ndarray:
        s_kt, p_uni, p_new_kt = self._aggregates()
        ex = (np.asarray(self.counts) + 0.5) * s_kt + p_uni
        return np.r_[ex, p_new_kt + p_uni]

    def conditional_fraction(self, j: int) -> Fraction:
        if self._wf is None:
            raise ValueError("construct with exact=True for rational conditionals")
        self._check_slot(j)
        num = Fraction(0)
        tot = Fraction(0)
        for jj, w in zip(self._J.tolist(), self._wf):
            tot += w
            num += w * self._component_fraction(jj, j)
        return num / tot

    def _component_fraction(self, comp: int, j: int) -> Fraction:
        C, t = self.C, self.t
        if comp <= C:
            return Fraction(1, C + 1)
        if j == C + 1:
            return Fraction(comp - C, 2 * t + comp)
        return Fraction(2 * self.counts[j - 1] + 1, 2 * t + comp)

    def push(self, j: int) -> None:
        self._check_slot(j)
        C, t = self.C, self.t
        kt = self._J > C
        q = np.empty(self._J.size)
        den = t + 0.5 * self._J[kt]
        if j == C + 1:
            q[kt] = (0.5 * (self._J[kt] - C)) / den
        else:
            q[kt] = (self.counts[j - 1] + 0.5) / den
        q[~kt] = 1.0 / (C + 1)
        w = self._w * q
        self._w = w / w.sum()
        if self._wf is not None:
            self._wf = [
                w0 * self._component_fraction(jj, j)
                for jj, w0 in zip(self._J.tolist(), self._wf)
            ]
        self._advance(j)

    def _freq_profile(self):
        C, t = self.C, self.t
        s_kt, p_uni, p_new_kt = self._aggregates()
        kt_active = bool((self._J > C).any())
        uni_active = bool((self._J <= C).any())
        a = max(1, int(_FREQ_SCALE * s_kt / 2)) if kt_active else 0
        b = max(1, int(_FREQ_SCALE * p_uni)) if uni_active else 0
        new = max(1, int(_FREQ_SCALE * p_new_kt)) if kt_active else 0
        # Floors keep the total near _FREQ_SCALE, but the minimum-width bumps
        # scale with t and C and can push past the coder capacity on long
        # inputs. Shave the dominant term to fit; it dwarfs the excess, so
        # every slot keeps a nonzero width.
        d, e = 2 * t + C, C + 1
        over = a * d + b * e + new - _FREQ_CAP
        if over > 0:
            if a * d >= b * e and a * d >= new:
                a -= -(-over // d)
            elif b * e >= new:
                b -= -(-over // e)
            else:
                new -= over
        return a, b, new


class GeneralizedKTModel(_SlotModelBase):
    """Add-nu pattern estimator with a pluggable new-index mass.

    Existing index j: (n_j + nu) / (t + C*nu + chi(t, C)); the new-index
    event gets chi(t, C) against the same denominator. chi takes the number
    of symbols seen so far and the distinct count, and must be positive.
    With an alphabet bound M, each individual unseen letter would get the
    new-index mass divided by (M - C); the pattern-level conditional is the
    aggregate and does not depend on M beyond exhaustion checks.

    The default chi recovers :class:`UnknownKPatternModel` with the given
    eps; chi(t, C) = (k - C)/2 with nu = 1/2 recovers the known-size coder.
    """

    def __init__(self, nu: float, chi=None, M: int | None = None, eps: float = 0.1):
        if nu <= 0:
            raise ValueError("nu must be positive")
        if M is not None and M < 1:
            raise ValueError("M must be >= 1")
        super().__init__()
        self.nu = nu
        self.M = M
        self.chi = chi if chi is not None else (lambda t, C: (C + 1) ** (1.0 - eps) / 2)
        self._table_t = -1
        self._table: np.ndarray | None = None

    def _exhausted(self) -> bool:
        return self.M is not None and self.C == self.M

    def conditional(self, j: int) -> float:
        self._check_slot(j)
        if self._exhausted():
            # No letters left: the chi mass vanishes and add-nu renormalizes.
            den = self.t + self.C * self.nu
            return 0.0 if j == self.C + 1 else (self.counts[j - 1] + self.nu) / den
        chi = self.chi(self.t, self.C)
        den = self.t + self.C * self.nu + chi
        if j == self.C + 1:
            return chi / den
        return (self.counts[j - 1] + self.nu) / den

    def step_distribution(self) -> np.ndarray:
        if self._exhausted():
            den = self.t + self.C * self.nu
            return np.r_[(np.asarray(self.counts) + self.nu) / den, 0.0]
        chi = self.chi(self.t, self.C)
        den = self.t + self.C * self.nu + chi
        return np.r_[(np.asarray(self.counts) + self.nu) / den, chi / den]

    def push(self, j: int) -> None:
        self._check_slot(j)
        if j == self.C + 1 and self._exhausted():
            raise ValueError("alphabet exhausted")
        self._advance(j)

    # Conditionals are not affine in the counts for general nu, so the coder
    # view quantizes the whole step distribution into a cumulative table.
    def _freq_table(self) -> np.ndarray:
        if self._table_t != self.t or self._table is None:
            probs = self.step_distribution()
            # Clamping every slot to >= 1 adds up to C+1 on top of the scale,
            # so shrink the scale enough to keep the total under 2^32.
            scale = min(_FREQ_SCALE, (1 << 32) - 2 * (self.C + 2))
            if scale < 2 * (self.C + 2):
                raise ValueError("alphabet too large for coder view")
            f = np.maximum(1, np.round(probs * scale)).astype(np.int64)
            f[probs <= 0] = 0
            self._table = np.concatenate([[0], np.cumsum(f)])
            self._table_t = self.t
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


# --- factories with the library's public names -------------------------------


def kt_iid_model(k: int) -> KTSequenceModel:
    """Add-half estimator over a known k-letter alphabet."""
    return KTSequenceModel(k)


def pattern_known_k_model(k: int) -> KnownKPatternModel:
    """Pattern coder when the source alphabet size k is known."""
    return KnownKPatternModel(k)


def pattern_mixture_model(
    n: int, j_max: int | None = None, exact: bool = False
) -> MixturePatternModel:
    """Mixture of known-size pattern coders over sizes 2..min(n, j_max)."""
    return MixturePatternModel(n, j_max=j_max, exact=exact)


def pattern_unknown_k_model(eps: float) -> UnknownKPatternModel:
    """Pattern coder that never needs the alphabet size."""
    return UnknownKPatternModel(eps)


def gkt_model(nu: float, chi=None, M: int | None = None, eps: float = 0.1) -> GeneralizedKTModel:
    """Generalized add-nu pattern estimator with pluggable new-index mass."""
    return GeneralizedKTModel(nu, chi=chi, M=M, eps=eps)


def assign_log_prob(model, pattern) -> float:
    """Feed ``pattern`` through ``model`` and return -log2 of its probability.

    The model is advanced in place; pass a fresh instance for a full-pattern
    probability.
    """
    bits = 0.0
    for j in pattern:
        p = model.conditional(int(j))
        if p <= 0:
            raise ValueError(f"zero-probability step for index {j}")
        bits -= math.log2(p)
        model.push(int(j))
    return bits


def modified_redundancy(bits: float, pattern) -> CodeLengthReport:
    """Per-symbol code-length excess over the sequence's own ML i.i.d. cost.

    Negative values are meaningful: a pattern can be cheaper to describe
    than the best i.i.d. fit of the underlying sequence.
    """
    pattern = list(pattern)
    n = len(pattern)
    if n == 0:
        raise ValueError("empty pattern")
    neg_log_pml = -iid_ml(pattern)
    return CodeLengthReport(
        bits=bits,
        neg_log_pml=neg_log_pml,
        modified_redundancy=(bits - neg_log_pml) / n,
        n=n,
        k=max(pattern),
    )


# --- vectorized code-length evaluators ---------------------------------------
# These reproduce assign_log_prob for the known-size and unknown-size coders
# in closed form from per-position statistics, so sweeps over n = 10^6 and
# batches of random patterns stay cheap.


def known_k_bits_from_stats(occ_before, distinct_before, k) -> np.ndarray:
    """Assigned bits of the known-size coder from per-position stats.

    Accepts 1-D or 2-D (batch x position) arrays; ``k`` may be a scalar or a
    per-row column vector. Positions are the trailing axis.
    """
    occ = np.asarray(occ_before, dtype=np.float64)
    dist = np.asarray(distinct_before, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    t = np.arange(occ.shape[-1], dtype=np.float64)
    num = np.where(occ == 0, (k - dist) / 2.0, occ + 0.5)
    den = t + k / 2.0
    return -np.log2(num / den).sum(axis=-1)


def unknown_k_bits_from_stats(occ_before, distinct_before, eps: float) -> np.ndarray:
    """Assigned bits of the unknown-size coder from per-position stats."""
    occ = np.asarray(occ_before, dtype=np.float64)
    dist = np.asarray(distinct_before, dtype=np.float64)
    t = np.arange(occ.shape[-1], dtype=np.float64)
    chi2 = (dist + 1.0) ** (1.0 - eps)
    num = np.where(occ == 0, chi2, 2.0 * occ + 1.0)
    den = 2.0 * t + dist + chi2
    return -np.log2(num / den).sum(axis=-1)


def known_k_pattern_bits(pattern, k: int | None = None) -> float:
    """-log2 assigned probability of ``pattern`` under the known-size coder.

    k defaults to the pattern's own distinct count.
    """
    occ, dist = pattern_prefix_stats(pattern)
    if k is None:
        k = int(dist[-1] + (occ[-1] == 0)) if len(occ) else 0
        k = max(k, 1)
    return float(known_k_bits_from_stats(occ, dist, k))


def unknown_k_pattern_bits(pattern, eps: float) -> float:
    """-log2 assigned probability of ``pattern`` under the unknown-size coder."""
    occ, dist = pattern_prefix_stats(pattern)
    return float(unknown_k_bits_from_stats(occ, dist, eps))
