"""Exact pattern probabilities under a known parameter vector.

The probability that an i.i.d. source with parameters theta emits a given
pattern is a sum over injections from pattern indices to letters. Two
evaluation strategies coexist here because neither covers everything:

* a Ryser-style inclusion-exclusion over letter subsets,

      P(pattern) = sum_S (-1)^(kh-|S|) C(d-|S|, kh-|S|) prod_i sigma_{m_i}(S)

  with power sums sigma_m(S) = sum_{j in S} theta_j^m, run in exact rational
  arithmetic. The alternating terms cancel almost completely for skewed
  theta (the term/result ratio grows exponentially with sequence length),
  so this form is only trustworthy when evaluated exactly, which restricts
  it to short patterns and small alphabets;

* a positive-term dynamic program over subsets of the occupied slots,
  scanning letters one at a time. All additions are of nonnegative numbers,
  so it is stable in float64 at any length, at the price of 2^k slot tables.

The sequential model runs forward and backward letter scans of the same DP
and combines them into per-step conditionals, one pass per emitted symbol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy.optimize import minimize

from patternzip.patterns import is_valid_pattern, occurrence_counts

# Inclusion-exclusion and entropy sums accept up to this many letters; the
# sequential machinery needs 2^k slot tables and stops a little earlier.
MAX_PROB_ALPHABET = 25
MAX_MODEL_ALPHABET = 20
MAX_ML_ALPHABET = 12

_LN2 = math.log(2.0)

# Slot-subset gather tables are materialized up to this k; past it the
# chain updates fall back to strided views, which need no tables at all.
_MAX_GATHER = 16

# A letter scan in plain float64 is safe only while no single assignment
# factor can climb back above the underflow floor once a partial sum has
# flushed to zero. Factors are bounded by exp of the largest positive
# entry of the scaled exponent matrix, so this threshold caps it; see
# _injection_mode.
_LINEAR_EXP_LIMIT = 340.0


def all_patterns(n: int):
    """Yield every pattern of length n (restricted growth sequences)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        yield []
        return
    pattern = [1] * n

    def rec(i: int, high: int):
        if i == n:
            yield list(pattern)
            return
        for j in range(1, high + 2):
            pattern[i] = j
            yield from rec(i + 1, max(high, j))

    yield from rec(1, 1)


def _check_theta(theta, limit: int) -> np.ndarray:
    th = np.asarray(theta, dtype=float).ravel()
    if th.size < 1:
        raise ValueError("theta must be nonempty")
    if th.size > limit:
        raise ValueError(
            f"alphabet larger than {limit} is out of exact range; use Monte Carlo"
        )
    if np.any(th <= 0):
        raise ValueError("theta entries must be positive")
    if abs(float(th.sum()) - 1.0) > 1e-9:
        raise ValueError("theta must sum to 1")
    return th / th.sum()


# --- exact-rational inclusion-exclusion -----------------------------------------


def _exact_log2_prob(counts: np.ndarray, th: np.ndarray) -> float:
    """Inclusion-exclusion in Fraction arithmetic; bit-exact, small inputs only."""
    d = th.size
    kh = counts.size
    thf = [Fraction(float(x)) for x in th]
    total_mass = sum(thf)
    thf = [x / total_mass for x in thf]
    mvals, mult = np.unique(counts, return_counts=True)
    pow_table = [[x ** int(m) for x in thf] for m in mvals]
    total = Fraction(0)
    for r in range(1, kh + 1):
        coef = (-1) ** (kh - r) * math.comb(d - r, kh - r)
        for subset in combinations(range(d), r):
            prod = Fraction(coef)
            for row, mu in zip(pow_table, mult):
                sigma = sum(row[j] for j in subset)
                prod *= sigma ** int(mu)
            total += prod
    if total <= 0:
        return -math.inf
    return math.log2(total.numerator) - math.log2(total.denominator)


# --- positive-term injection DP ---------------------------------------------------
#
# State: F(T) = sum over injections of the slot subset T into the letters
# scanned so far of prod_{i in T} theta_letter^{m_i}, with per-slot scaling
# baked into the factor matrix. Scanning one more letter j updates
# F(T) += sum_{i in T} factor[j, i] * F(T \ {i}); every term is nonnegative.


@lru_cache(maxsize=8)
def _xor_index(kh: int) -> np.ndarray:
    masks = np.arange(1 << kh, dtype=np.int64)
    idx = masks[None, :] ^ (np.int64(1) << np.arange(kh, dtype=np.int64))[:, None]
    idx.setflags(write=False)
    return idx

@lru_cache(maxsize=8)
def _setbit_mask(kh: int) -> np.ndarray:
    masks = np.arange(1 << kh, dtype=np.int64)
    m = ((masks[None, :] >> np.arange(kh)[:, None]) & 1).astype(float)
    m.setflags(write=False)
    return m


def _slot_prescale(m: np.ndarray, log_theta: np.ndarray) -> np.ndarray:
    """Per-slot log scale from the sorted matching of counts to letters.

    Matching the largest count with the richest letter maximizes the
    injection weight, so after dividing it out the dominant injection sits
    at exp(0) and the DP never underflows as a whole.
    """
    order = np.argsort(-m, kind="stable")
    top = np.sort(log_theta)[::-1][: m.size]
    s = np.empty(m.size)
    s[order] = m[order] * top
    return s


def _injection_mode(X: np.ndarray) -> bool:
    """True when the plain-float64 scan is safe for this exponent matrix.

    A flushed partial sum can only resurface if some later factor exceeds
    the flushing gap; capping every positive exponent keeps any such
    revival at least ~e^-28 below the dominant injection, which is noise.
    """
    return bool(X.max() <= _LINEAR_EXP_LIMIT)


def _scan_letter(F: np.ndarray, factors: np.ndarray) -> np.ndarray:
    kh = factors.size
    if kh <= _MAX_GATHER:
        G = F[_xor_index(kh)]
        return F + np.einsum("i,it,it->t", factors, _setbit_mask(kh), G)
    out = F.copy()
    for i in range(kh):
        dst = out.reshape(-1, 2, 1 << i)
        src = F.reshape(-1, 2, 1 << i)
        dst[:, 1, :] += src[:, 0, :] * factors[i]
    return out


def _scan_letter_log(logF: np.ndarray, log_factors: np.ndarray) -> np.ndarray:
    kh = log_factors.size
    out = logF.copy()
    for i in range(kh):
        dst = out.reshape(-1, 2, 1 << i)
        src = logF.reshape(-1, 2, 1 << i)
        np.logaddexp(dst[:, 1, :], src[:, 0, :] + log_factors[i], out=dst[:, 1, :])
    return out


def _forward_chain(pows: np.ndarray) -> list[np.ndarray]:
    d, kh = pows.shape
    F = np.zeros(1 << kh)
    F[0] = 1.0
    chain = [F]
    for j in range(d):
        F = _scan_letter(F, pows[j])
        chain.append(F)
    return chain


def _backward_chain(pows: np.ndarray) -> list[np.ndarray]:
    d, kh = pows.shape
    B = np.zeros(1 << kh)
    B[0] = 1.0
    chain: list[np.ndarray] = [B] * (d + 1)
    chain[d] = B
    for j in range(d - 1, -1, -1):
        B = _scan_letter(B, pows[j])
        chain[j] = B
    return chain


def _forward_chain_log(X: np.ndarray) -> list[np.ndarray]:
    d, kh = X.shape
    F = np.full(1 << kh, -np.inf)
    F[0] = 0.0
    chain = [F]
    for j in range(d):
        F = _scan_letter_log(F, X[j])
        chain.append(F)
    return chain


def _backward_chain_log(X: np.ndarray) -> list[np.ndarray]:
    d, kh = X.shape
    B = np.full(1 << kh, -np.inf)
    B[0] = 0.0
    chain: list[np.ndarray] = [B] * (d + 1)
    chain[d] = B
    for j in range(d - 1, -1, -1):
        B = _scan_letter_log(B, X[j])
        chain[j] = B
    return chain


def _injection_ln_prob(counts: np.ndarray, log_theta: np.ndarray) -> float:
    """Natural log of the injection sum; assumes 1 <= len(counts) <= len(theta)."""
    m = counts.astype(float)
    s = _slot_prescale(m, log_theta)
    X = m[None, :] * log_theta[:, None] - s[None, :]
    full = (1 << m.size) - 1
    if _injection_mode(X):
        val = _forward_chain(np.exp(X))[-1][full]
        if val > 0 and math.isfinite(val):
            return math.log(val) + float(s.sum())
    return float(_forward_chain_log(X)[-1][full]) + float(s.sum())


def _log2_prob_from_counts_arr(
    counts: np.ndarray, th: np.ndarray, allow_exact: bool = True
) -> float:
    kh = counts.size
    d = th.size
    if kh == 0:
        return 0.0
    if kh > d:
        return -math.inf
    if kh > MAX_MODEL_ALPHABET:
        raise ValueError(
            f"patterns with more than {MAX_MODEL_ALPHABET} distinct indices are"
            " out of exact range; use Monte Carlo"
        )
    if np.allclose(th, 1.0 / d, rtol=0, atol=1e-15):
        # Uniform sources depend only on how many distinct indices appear.
        log_falling = sum(math.log2(d - i) for i in range(kh))
        return log_falling - float(counts.sum()) * math.log2(d)
    if allow_exact and d <= 8 and counts.sum() <= 64:
        return _exact_log2_prob(counts, th)
    return _injection_ln_prob(counts, np.log(th)) / _LN2


def pattern_log2_prob(theta, pattern) -> float:
    """log2 of the pattern probability under an i.i.d. theta source."""
    th = _check_theta(theta, MAX_PROB_ALPHABET)
    pattern = np.asarray(pattern, dtype=np.int64)
    if not is_valid_pattern(pattern.tolist()):
        raise ValueError("not a valid pattern")
    counts = np.asarray(occurrence_counts(pattern), dtype=np.int64)
    return _log2_prob_from_counts_arr(counts, th)


def pattern_log2_prob_from_counts(theta, counts) -> float:
    """Same quantity from occurrence counts alone (their order is irrelevant)."""
    th = _check_theta(theta, MAX_PROB_ALPHABET)
    counts = np.asarray(counts, dtype=np.int64).ravel()
    if counts.size and counts.min() < 1:
        raise ValueError("counts must be positive")
    return _log2_prob_from_counts_arr(counts, th)


def pattern_prob(theta, pattern) -> float:
    """Probability that the source emits this pattern; may underflow to 0."""
    lg = pattern_log2_prob(theta, pattern)
    return 0.0 if lg == -math.inf else 2.0 ** lg


def pattern_prob_bruteforce(theta, pattern) -> float:
    """Sum sequence probabilities directly; only for tiny n and alphabets."""
    th = _check_theta(theta, MAX_PROB_ALPHABET)
    pattern = list(int(j) for j in pattern)
    n, d = len(pattern), th.size
    if d ** n > 2 * 10 ** 7:
        raise ValueError("brute force space too large")
    from itertools import product

    from patternzip.patterns import extract_pattern

    total = 0.0
    for seq in product(range(d), repeat=n):
        if extract_pattern(seq) == pattern:
            p = 1.0
            for s in seq:
                p *= th[s]
            total += p
    return total


# --- sequential view of the true pattern process -------------------------------


class PatternSourceModel:
    """Sequential pattern distribution induced by a known theta.

    Exposes the same stepping and integer-frequency interface as the
    estimator models, so the range coder can code patterns under their true
    process. Each step runs a forward and a backward letter scan of the
    injection DP and reads all next-slot conditionals off the pair.
    """

    def __init__(self, theta):
        self.theta = _check_theta(theta, MAX_MODEL_ALPHABET)
        self.d = self.theta.size
        self.counts: list[int] = []
        self.t = 0
        self._log_theta = np.log(self.theta)
        self._log_prefix = 0.0
        self._cache_t = -1
        self._cache: tuple[np.ndarray, np.ndarray, float, float] | None = None
        self._table: np.ndarray | None = None
        self._table_t = -1

    @property
    def C(self) -> int:
        return len(self.counts)

    def clone(self) -> "PatternSourceModel":
        other = PatternSourceModel.__new__(PatternSourceModel)
        other.theta = self.theta
        other.d = self.d
        other.counts = list(self.counts)
        other.t = self.t
        other._log_theta = self._log_theta
        other._log_prefix = self._log_prefix
        other._cache_t = -1
        other._cache = None
        other._table = None
        other._table_t = -1
        return other

    def _step(self) -> tuple[np.ndarray, np.ndarray, float, float]:
        """Per-step data: (q, ln_num, lnP, s_sum).

        q[j-1] are the C+1 next-slot conditionals; ln_num[j-1] is the scaled
        log numerator ln P(prefix + slot j) + s_sum, so adding s_sum back
        recovers the true log prefix probability after a push.
        """
        if self._cache_t == self.t and self._cache is not None:
            return self._cache
        d = self.d
        m = np.asarray(self.counts, dtype=float)
        kh = m.size
        s = _slot_prescale(m, self._log_theta)
        X = m[None, :] * self._log_theta[:, None] - s[None, :]
        q, ln_num, lnP = self._marginals_linear(X) if kh == 0 or _injection_mode(X) else (None, None, None)
        if q is None or not np.all(np.isfinite(q)):
            q, ln_num, lnP = self._marginals_log(X)
        self._cache = (q, ln_num, lnP, float(s.sum()))
        self._cache_t = self.t
        return self._cache

    def _marginals_linear(self, X):
        d, kh = X.shape
        full = (1 << kh) - 1
        pows = np.exp(X)
        Fs = _forward_chain(pows)
        Bs = _backward_chain(pows)
        if Bs[0][full] <= 0 or not math.isfinite(Bs[0][full]):
            return None, None, None
        lnP = math.log(Bs[0][full])
        U = np.empty((kh, d))
        V = np.empty(d)
        if kh <= _MAX_GATHER:
            xor_idx = _xor_index(kh)
            notmask = 1.0 - _setbit_mask(kh)
            for l0 in range(d):
                revB = Bs[l0 + 1][::-1]
                V[l0] = float(Fs[l0] @ revB)
                if kh:
                    U[:, l0] = np.einsum("it,it,t->i", notmask, revB[xor_idx], Fs[l0])
        else:
            for l0 in range(d):
                revB = Bs[l0 + 1][::-1]
                V[l0] = float(Fs[l0] @ revB)
                for i in range(kh):
                    Fv = Fs[l0].reshape(-1, 2, 1 << i)[:, 0, :]
                    Bv = revB.reshape(-1, 2, 1 << i)[:, 1, :]
                    U[i, l0] = float(np.einsum("ab,ab->", Fv, Bv))
        pows1 = pows * self.theta[:, None]
        num = np.einsum("li,il->i", pows1, U) if kh else np.empty(0)
        new_num = float(self.theta @ V)
        with np.errstate(divide="ignore"):
            ln_num = np.log(np.concatenate([num, [new_num]]))
        if not np.all(np.isfinite(np.concatenate([num, [new_num]]))):
            return None, None, None
        q = np.exp(ln_num - lnP)
        return q, ln_num, lnP

    def _marginals_log(self, X):
        from scipy.special import logsumexp

        d, kh = X.shape
        full = (1 << kh) - 1
        Fs = _forward_chain_log(X)
        Bs = _backward_chain_log(X)
        lnP = float(Bs[0][full])
        U = np.empty((kh, d))
        V = np.empty(d)
        setmask = (
            _setbit_mask(kh).astype(bool)
            if kh <= _MAX_GATHER
            else ((np.arange(1 << kh)[None, :] >> np.arange(max(kh, 1))[:, None]) & 1).astype(bool)
        )
        with np.errstate(invalid="ignore"):
            for l0 in range(d):
                revB = Bs[l0 + 1][::-1]
                V[l0] = logsumexp(Fs[l0] + revB)
                if kh:
                    idx = _xor_index(kh) if kh <= _MAX_GATHER else (
                        np.arange(1 << kh)[None, :] ^ (1 << np.arange(kh))[:, None]
                    )
                    Z = np.where(setmask, -np.inf, revB[idx] + Fs[l0][None, :])
                    U[:, l0] = logsumexp(Z, axis=1)
        X1 = X + self._log_theta[:, None]
        if kh:
            exist = logsumexp(X1.T + U, axis=1)
        else:
            exist = np.empty(0)
        new = logsumexp(self._log_theta + V)
        ln_num = np.concatenate([exist, [new]])
        q = np.exp(ln_num - lnP)
        return q, ln_num, lnP

    def _check_slot(self, j: int) -> None:
        if not 1 <= j <= self.C + 1:
            raise ValueError(f"slot {j} out of range")

    def conditional(self, j: int) -> float:
        self._check_slot(j)
        return float(self._step()[0][j - 1])

    def step_distribution(self) -> np.ndarray:
        """All C+1 next-slot conditionals from one forward-backward pass."""
        return self._step()[0].copy()

    def push(self, j: int) -> None:
        self._check_slot(j)
        if j == self.C + 1 and self.C >= self.d:
            raise ValueError("alphabet exhausted")
        _, ln_num, _, s_sum = self._step()
        self._log_prefix = float(ln_num[j - 1]) + s_sum
        if j == self.C + 1:
            self.counts.append(1)
        else:
            self.counts[j - 1] += 1
        self.t += 1
        self._cache_t = -1
        self._table_t = -1

    @property
    def log2_prefix_prob(self) -> float:
        return self._log_prefix / _LN2

    # Integer coder view: quantize the whole step distribution.

    def _freq_table(self) -> np.ndarray:
        if self._table_t != self.t or self._table is None:
            probs = self._step()[0]
            probs = probs / probs.sum()
            scale = min((1 << 32) - (1 << 16), (1 << 32) - 2 * (self.C + 2))
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


def prefix_conditionals(theta, pattern) -> np.ndarray:
    """Conditional probability of each pattern symbol given its prefix.

    The product over steps telescopes to pattern_prob; the first entry is
    always 1 because the first symbol of any pattern is the first new index.
    """
    pattern = [int(j) for j in pattern]
    if not is_valid_pattern(pattern):
        raise ValueError("not a valid pattern")
    model = PatternSourceModel(theta)
    out = np.empty(len(pattern))
    for i, j in enumerate(pattern):
        out[i] = model.conditional(j)
        model.push(j)
    return out


# --- entropies ------------------------------------------------------------------


def _partitions(n: int, cap: int | None = None):
    """Yield partitions of n as non-increasing lists, first part descending."""
    cap = n if cap is None else cap
    if n == 0:
        yield []
        return
    for first in range(min(cap, n), 0, -1):
        for rest in _partitions(n - first, first):
            yield [first] + rest


def pattern_entropy_exhaustive(theta, n: int) -> float:
    """Entropy of the length-n pattern in bits, summed over all patterns.

    Patterns with the same multiset of occurrence counts are equiprobable,
    so the sum runs over integer partitions of n weighted by the number of
    set partitions with those block sizes.
    """
    if n > 12:
        raise ValueError("exhaustive entropy is limited to n <= 12")
    th = _check_theta(theta, MAX_PROB_ALPHABET)
    h = 0.0
    for parts in _partitions(n):
        if len(parts) > th.size:
            continue
        weight = math.factorial(n)
        for p in parts:
            weight //= math.factorial(p)
        _, mult = np.unique(parts, return_counts=True)
        for mu in mult:
            weight //= math.factorial(int(mu))
        lg = _log2_prob_from_counts_arr(
            np.asarray(parts, dtype=np.int64), th, allow_exact=False
        )
        if lg > -math.inf:
            h -= weight * 2.0 ** lg * lg
    return h


def pattern_entropy_mc(
    theta, n: int, samples: int = 10000, seed: int = 0
) -> tuple[float, float]:
    """Monte Carlo estimate of pattern entropy in bits, with standard error."""
    th = _check_theta(theta, MAX_PROB_ALPHABET)
    d = th.size
    rng = np.random.default_rng(np.random.Philox(key=seed))
    neg_logs = np.empty(samples)
    uniform = bool(np.allclose(th, 1.0 / d, rtol=0, atol=1e-15))
    lf = np.cumsum(np.log2(d - np.arange(d)))
    done = 0
    while done < samples:
        batch = min(samples - done, max(1, 10 ** 7 // max(n, 1)))
        draws = rng.choice(d, size=(batch, n), p=th)
        if uniform:
            srt = np.sort(draws, axis=1)
            kh = (srt[:, 1:] != srt[:, :-1]).sum(axis=1) + 1
            neg_logs[done: done + batch] = n * math.log2(d) - lf[kh - 1]
        else:
            cache: dict[tuple, float] = {}
            for i in range(batch):
                counts = np.bincount(draws[i], minlength=d)
                key = tuple(sorted(counts[counts > 0], reverse=True))
                if key not in cache:
                    cache[key] = -_log2_prob_from_counts_arr(
                        np.asarray(key, dtype=np.int64), th, allow_exact=False
                    )
                neg_logs[done + i] = cache[key]
        done += batch
    mean = float(neg_logs.mean())
    stderr = float(neg_logs.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return mean, stderr


# --- maximum likelihood over the parameter vector --------------------------------


def pattern_ml_estimate(pattern, k: int | None = None, restarts: int = 16, maxiter: int = 4000):
    """Maximize the pattern probability over k-letter parameter vectors.

    Returns (theta_hat, log2_prob) with theta_hat sorted ascending. The
    search runs over softmax-parameterized simplices from the ordered
    empirical start plus seeded random restarts, so the result is at least
    as good as the empirical plug-in.
    """
    pattern = [int(j) for j in pattern]
    if not is_valid_pattern(pattern):
        raise ValueError("not a valid pattern")
    counts = np.asarray(occurrence_counts(pattern), dtype=np.int64)
    kh = counts.size
    if kh == 0:
        raise ValueError("pattern must be nonempty")
    if k is None:
        k = kh
    if k < kh:
        raise ValueError("k must be at least the number of distinct indices")
    if k > MAX_ML_ALPHABET:
        raise ValueError(
            f"the exact optimizer is capped at k = {MAX_ML_ALPHABET}; use Monte Carlo"
        )

    def objective(z: np.ndarray) -> float:
        w = np.exp(z - z.max())
        th = np.maximum(w / w.sum(), 1e-300)
        th = th / th.sum()
        return -_injection_ln_prob(counts, np.log(th)) / _LN2

    empirical = np.maximum(counts / counts.sum(), 1e-12)
    starts = [np.log(np.concatenate([empirical, np.full(k - kh, 1e-12)]))]
    rng = np.random.default_rng(12345)
    for _ in range(restarts):
        starts.append(np.log(rng.dirichlet(np.ones(k)) + 1e-12))

    best_z, best_val = starts[0], objective(starts[0])
    for z0 in starts:
        res = minimize(
            objective,
            z0,
            method="Nelder-Mead",
            options={"fatol": 1e-10, "xatol": 1e-10, "maxiter": maxiter},
        )
        if res.fun < best_val:
            best_val, best_z = res.fun, res.x
    w = np.exp(best_z - best_z.max())
    theta = np.sort(w / w.sum())
    return theta, -best_val


# --- integer partitions and the type code ----------------------------------------


MAX_PARTITION_N = 400


@dataclass(frozen=True)
class PartitionType:
    """Unordered occurrence counts of a pattern: a partition of its length."""

    parts: tuple[int, ...]

    def __post_init__(self):
        if any(p < 1 for p in self.parts):
            raise ValueError("parts must be positive")
        if any(a < b for a, b in zip(self.parts, self.parts[1:])):
            raise ValueError("parts must be nonincreasing")

    @property
    def n(self) -> int:
        return sum(self.parts)

    @property
    def distinct(self) -> int:
        return len(self.parts)


def partition_type(pattern) -> PartitionType:
    """The multiset of occurrence counts, sorted non-increasing."""
    return PartitionType(tuple(sorted(occurrence_counts(pattern), reverse=True)))


@lru_cache(maxsize=None)
def _parts_at_most(m: int, b: int) -> int:
    """Partitions of m into parts of size at most b."""
    if m == 0:
        return 1
    if m < 0 or b == 0:
        return 0
    return _parts_at_most(m - b, min(b, m - b)) + _parts_at_most(m, b - 1)


def _warm_partition_table(n: int) -> None:
    # Fill the cache bottom-up so no call recurses deeply.
    for m in range(n + 1):
        for b in range(m + 1):
            _parts_at_most(m, b)


def partition_count(n: int) -> int:
    """Number of integer partitions p(n); p(0) = 1."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n > MAX_PARTITION_N:
        raise ValueError(f"partition table capped at n = {MAX_PARTITION_N}")
    _warm_partition_table(n)
    return _parts_at_most(n, n)


def partition_rank(parts) -> int:
    """Rank of a partition among partitions of its sum.

    Partitions are ordered by first part descending, recursively, so [n] has
    rank 0 and the all-ones partition has rank p(n) - 1.
    """
    if isinstance(parts, PartitionType):
        parts = parts.parts
    parts = [int(p) for p in parts]
    if any(p < 1 for p in parts):
        raise ValueError("parts must be positive")
    if any(a < b for a, b in zip(parts, parts[1:])):
        raise ValueError("parts must be nonincreasing")
    m = sum(parts)
    if m > MAX_PARTITION_N:
        raise ValueError(f"partition table capped at n = {MAX_PARTITION_N}")
    _warm_partition_table(m)
    bound = m
    rank = 0
    for f in parts:
        for g in range(min(bound, m), f, -1):
            rank += _parts_at_most(m - g, min(g, m - g))
        m -= f
        bound = f
    return rank


def partition_unrank(n: int, rank: int) -> list[int]:
    """Inverse of :func:`partition_rank` for partitions of n."""
    if not 0 <= rank < partition_count(n):
        raise ValueError("rank out of range")
    out = []
    bound = n
    m = n
    while m > 0:
        for g in range(min(bound, m), 0, -1):
            block = _parts_at_most(m - g, min(g, m - g))
            if rank < block:
                out.append(g)
                m -= g
                bound = g
                break
            rank -= block
    return out


def type_code_encode(pattern) -> "BitStream":
    """Two-stage code: partition rank of the counts, then the pattern coded
    under its ordered empirical distribution."""
    from patternzip.coder import BitStream, arith_encode

    pattern = [int(j) for j in pattern]
    ptype = partition_type(pattern)
    if ptype.distinct > MAX_MODEL_ALPHABET:
        raise ValueError(
            f"patterns with more than {MAX_MODEL_ALPHABET} distinct indices are"
            " out of exact range; use Monte Carlo"
        )
    n = len(pattern)
    rank = partition_rank(ptype)
    width = max(1, (partition_count(n) - 1).bit_length())
    out = BitStream()
    out.append_bits(rank, width)
    theta = np.asarray(ptype.parts, dtype=float) / n
    out.extend(arith_encode(PatternSourceModel(theta), pattern))
    return out


def type_code_decode(bits, n: int) -> list[int]:
    """Invert :func:`type_code_encode` given the pattern length."""
    from patternzip.coder import BitReader, BitStream, arith_decode

    reader = (
        BitReader(bits.to_bytes(), bits.bit_length)
        if isinstance(bits, BitStream)
        else bits
    )
    width = max(1, (partition_count(n) - 1).bit_length())
    rank = reader.read_bits(width)
    counts = partition_unrank(n, rank)
    theta = np.asarray(counts, dtype=float) / n
    return arith_decode(PatternSourceModel(theta), reader, n)
