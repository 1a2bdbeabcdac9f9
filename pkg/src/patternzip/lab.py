"""Measurement harness: sample sources, code their patterns, compare against
the closed-form ceilings, and run the Monte-Carlo distinguishability checks.

Everything is keyed by a counter-based Philox generator split over
``(master seed, tags...)``, so any cell of a sweep can be recomputed in
isolation and execution order never changes results. Sweeps over n = 10**6
stay cheap because the known-size and unknown-size coders are evaluated in
closed form from per-position prefix statistics instead of stepping a model.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from patternzip import bounds
from patternzip import models
from patternzip.exact import (
    MAX_MODEL_ALPHABET,
    MAX_PARTITION_N,
    pattern_entropy_mc,
    type_code_encode,
)
from patternzip.patterns import (
    as_param_vector,
    extract_pattern_array,
    iid_ml,
    pattern_prefix_stats,
)
from patternzip.twopart import make_grid, twopart_encode

_LOG = logging.getLogger("patternzip.lab")

SCHEMES = ("known-k", "mixture", "unknown-k", "two-part", "type-code")

# Stepped (non-vectorized) coders get size guards so a sweep cell never takes
# minutes; skipped cells are logged, not errored.
_MIXTURE_MAX_N = 32_768
_TWO_PART_MAX_N = 65_536


def make_rng(master_seed: int, *tags: int) -> np.random.Generator:
    """Philox generator for the cell addressed by ``tags`` under one master
    seed. Same address, same stream, regardless of what ran before."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(t) for t in tags))
    return np.random.Generator(np.random.Philox(ss))


# --- sources -------------------------------------------------------------------


@dataclass(frozen=True)
class SourceSpec:
    """Where the letter probabilities come from.

    ``prior`` is one of ``uniform`` (flat Dirichlet over the simplex),
    ``zipf`` (deterministic theta_i proportional to 1/i**s, a convenience for
    skewed sources), ``fixed`` (explicit ``theta``), or ``grid`` (a random
    point of the lower quantization grid, all components at least the first
    grid step; needs ``eps``). ``seed`` pins every random choice.
    """

    k: int
    prior: str = "uniform"
    seed: int = 0
    s: float = 1.0
    theta: tuple[float, ...] | None = None
    eps: float = 0.1

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("letter count must be positive")
        if self.prior not in ("uniform", "zipf", "fixed", "grid"):
            raise ValueError(f"unknown prior {self.prior!r}")
        if self.prior == "fixed" and self.theta is None:
            raise ValueError("fixed prior needs an explicit theta")


def _lower_grid_source(
    rng: np.random.Generator, n: int, eps: float, k: int
) -> tuple[np.ndarray, list[int]]:
    """Random source on the lower quantization grid: the k-1 smallest
    components sit exactly on grid points (>= the first step), the largest
    carries the residual mass. Returns the source and the grid index of each
    component (for the off-grid residual, the nearest index from below).

    Indices are returned rather than recovered from the values later:
    ``tau(b) * scale`` can round one ulp under ``b**2``, which would shift a
    recovered index down a step.
    """
    grid = make_grid(n, eps, "lower")
    for _ in range(100):
        p = np.sort(rng.dirichlet(np.ones(k)))
        picks = sorted(max(1, grid.bracket(float(x))) for x in p[:-1])
        head = [grid.tau(b) for b in picks]
        residual = 1.0 - math.fsum(head)
        if residual > 0.0 and (not head or residual >= head[-1]):
            picks.append(max(picks[-1] if picks else 1, grid.bracket(residual)))
            return np.array(head + [residual]), picks
    raise ValueError("could not place a grid source; components keep colliding")


def _lower_grid_point(rng: np.random.Generator, n: int, eps: float, k: int) -> np.ndarray:
    return _lower_grid_source(rng, n, eps, k)[0]


def resolve_theta(spec: SourceSpec, n: int) -> np.ndarray:
    """Materialize the letter probabilities for ``spec``. Deterministic; the
    sequence length only matters for the ``grid`` prior, which quantizes on
    the n-dependent lattice."""
    if spec.prior == "uniform":
        if spec.k == 1:
            return np.array([1.0])
        return as_param_vector(make_rng(spec.seed, 0).dirichlet(np.ones(spec.k)))
    if spec.prior == "zipf":
        raw = 1.0 / np.arange(1, spec.k + 1, dtype=np.float64) ** spec.s
        return as_param_vector(raw / raw.sum())
    if spec.prior == "fixed":
        return as_param_vector(np.asarray(spec.theta, dtype=np.float64))
    if spec.k == 1:
        return np.array([1.0])
    return as_param_vector(_lower_grid_point(make_rng(spec.seed, 0), n, spec.eps, spec.k))


def sample_sequence(spec: SourceSpec, n: int, seed: int) -> np.ndarray:
    """Length-``n`` i.i.d. draw from the spec's source, letters 1..k.

    Deterministic per ``(spec, seed)``; the sequence stream is split away
    from the prior stream so reusing a seed across the two never couples
    them.
    """
    if n < 1:
        raise ValueError("sequence length must be positive")
    theta = resolve_theta(spec, n)
    rng = make_rng(spec.seed, 1, seed)
    return rng.choice(spec.k, size=n, p=theta).astype(np.int64) + 1


def worst_case_sequence(n: int, k: int) -> np.ndarray:
    """All k letters in the first k slots, then round-robin: the sequence
    whose pattern maximizes the sequential coders' redundancy. Counts of any
    two letters differ by at most one."""
    if k < 1:
        raise ValueError("letter count must be positive")
    if k > n:
        raise ValueError("letter count cannot exceed the sequence length")
    return (np.arange(n, dtype=np.int64) % k) + 1


# --- redundancy sweeps -----------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    """One sweep: fixed n and eps, a list of letter counts, a set of coding
    schemes, and either the worst-case input family or sampled sources."""

    n: int
    ks: tuple[int, ...]
    eps: float = 0.1
    schemes: tuple[str, ...] = ("known-k", "unknown-k")
    mode: str = "worst-case"
    trials: int = 1
    master_seed: int = 0
    prior: str = "uniform"

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("sequence length must be at least 2")
        if not self.ks:
            raise ValueError("need at least one letter count")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown:
            raise ValueError(f"unknown schemes: {sorted(unknown)}")
        if self.mode not in ("worst-case", "sampled"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.trials < 1:
            raise ValueError("need at least one trial")


@dataclass(frozen=True)
class SweepRow:
    """One measured cell: scheme, input size, measured code length, the
    modified redundancy it implies, and the matching ceiling on total
    modified redundancy (n times the per-symbol value). For the sequential
    coders the ceiling is a hard guarantee; for the two quantize-and-describe
    schemes it is the asymptotic target and small n can sit above it."""

    scheme: str
    n: int
    k: int
    eps: float
    seed: int
    bits: float
    neg_log_pml: float
    modified_redundancy: float
    bound_value: float


def _scheme_bits(scheme: str, pattern: np.ndarray, n: int, eps: float) -> float | None:
    """Measured code length in bits, or None with a logged reason when the
    scheme is infeasible at this size."""
    khat = int(pattern.max())
    if scheme == "known-k":
        occ, dis = pattern_prefix_stats(pattern)
        return float(models.known_k_bits_from_stats(occ, dis, khat).sum())
    if scheme == "unknown-k":
        occ, dis = pattern_prefix_stats(pattern)
        return float(models.unknown_k_bits_from_stats(occ, dis, eps).sum())
    if scheme == "mixture":
        if n > _MIXTURE_MAX_N:
            _LOG.info("skipping mixture at n=%d: stepped coder, guarded to n<=%d", n, _MIXTURE_MAX_N)
            return None
        return models.assign_log_prob(models.pattern_mixture_model(n), pattern.tolist())
    if scheme == "two-part":
        if n > _TWO_PART_MAX_N:
            _LOG.info("skipping two-part at n=%d: stepped coder, guarded to n<=%d", n, _TWO_PART_MAX_N)
            return None
        return float(twopart_encode(pattern.tolist(), n, eps).bit_length)
    if n > MAX_PARTITION_N or khat > MAX_MODEL_ALPHABET:
        _LOG.info(
            "skipping type-code at n=%d, k=%d: needs n<=%d and k<=%d",
            n, khat, MAX_PARTITION_N, MAX_MODEL_ALPHABET,
        )
        return None
    return float(type_code_encode(pattern.tolist()).bit_length)


def _scheme_bound(scheme: str, n: int, khat: int, eps: float) -> float:
    """Ceiling on total modified redundancy for a sweep row, evaluated at the
    pattern's own letter count.

    The two quantize-and-describe schemes get the achievability bound (region
    by letter count; the type code is letter-blind, so it always gets the
    large-alphabet expression with its reported 1/n correction).
    """
    if scheme == "known-k":
        return bounds.known_k_bits_bound(n, khat)
    if scheme == "unknown-k":
        return bounds.unknown_k_bits_bound(n, khat, eps)
    if scheme == "mixture":
        return bounds.mixture_bits_bound(n, khat)
    if scheme == "two-part":
        rep = bounds.achievable_upper_bound(bounds.BoundConfig(n=n, k=khat, eps=eps))
        return n * (rep.value + rep.o_term)
    return math.pi * math.sqrt(2.0 / 3.0) * bounds.LOG2E * math.sqrt(n) + 1.0


def _sweep_cell(config: SweepConfig, k: int, trial: int) -> list[SweepRow]:
    """Measure one (letter count, trial) cell. Self-seeded, so cells can run
    in any order or thread."""
    if config.mode == "worst-case":
        pattern = worst_case_sequence(config.n, k)
        seed = -1
    else:
        spec = SourceSpec(
            k=k,
            prior=config.prior,
            seed=int(make_rng(config.master_seed, 2, k, trial).integers(2**63)),
            eps=config.eps,
        )
        pattern = extract_pattern_array(sample_sequence(spec, config.n, trial))
        seed = trial
    neg_log_pml = -iid_ml(pattern)
    khat = int(pattern.max())
    rows = []
    for scheme in config.schemes:
        bits = _scheme_bits(scheme, pattern, config.n, config.eps)
        if bits is None:
            continue
        rows.append(
            SweepRow(
                scheme=scheme,
                n=config.n,
                k=k,
                eps=config.eps,
                seed=seed,
                bits=bits,
                neg_log_pml=neg_log_pml,
                modified_redundancy=(bits - neg_log_pml) / config.n,
                bound_value=_scheme_bound(scheme, config.n, khat, config.eps),
            )
        )
    return rows


def run_sweep(
    config: SweepConfig,
    csv_path: str | Path | None = None,
    workers: int = 1,
) -> list[SweepRow]:
    """Measure every (letter count, trial, scheme) cell of ``config``.

    Worst-case mode codes the deterministic round-robin family (one trial per
    k, row seed -1). Sampled mode draws ``trials`` fresh sources and one
    sequence each; the row seed is the trial index. Rows come back in
    (k, trial, scheme) order whatever ``workers`` is: cells are independent
    and self-seeded, so the merge order, not the completion order, fixes the
    output. Infeasible cells are skipped with a logged reason rather than
    failing the sweep.
    """
    cells = []
    for k in config.ks:
        if k > config.n:
            _LOG.info("skipping k=%d: exceeds n=%d", k, config.n)
            continue
        trial_count = 1 if config.mode == "worst-case" else config.trials
        cells.extend((k, trial) for trial in range(trial_count))

    if workers > 1 and len(cells) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda c: _sweep_cell(config, *c), cells))
    else:
        chunks = [_sweep_cell(config, k, trial) for k, trial in cells]

    rows = [row for chunk in chunks for row in chunk]
    if csv_path is not None:
        write_rows_csv(rows, csv_path)
    return rows


_CSV_FIELDS = (
    "scheme", "n", "k", "eps", "seed",
    "bits", "neg_log_pml", "modified_redundancy", "bound_value",
)


def write_rows_csv(rows: list[SweepRow], path: str | Path) -> Path:
    """Rows to CSV in SweepRow field order. Floats are written with repr so
    identical rows always give byte-identical files."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_FIELDS)
        for row in rows:
            writer.writerow(
                [
                    row.scheme, row.n, row.k, repr(row.eps), row.seed,
                    repr(row.bits), repr(row.neg_log_pml),
                    repr(row.modified_redundancy), repr(row.bound_value),
                ]
            )
    return path


_PLOT_TEMPLATE = '''"""Plot redundancy sweep curves from {csv_name}."""

import csv
from collections import defaultdict

import matplotlib.pyplot as plt

series = defaultdict(list)
with open({csv_name!r}) as fh:
    for row in csv.DictReader(fh):
        n = int(row["n"])
        label = row["scheme"]
        series[label].append((int(row["k"]), float(row["modified_redundancy"]) * n))
        series[label + " bound"].append((int(row["k"]), float(row["bound_value"])))

fig, ax = plt.subplots(figsize=(8, 5))
for label in sorted(series):
    pts = sorted(series[label])
    style = "--" if label.endswith(" bound") else "-"
    ax.plot([p[0] for p in pts], [p[1] for p in pts], style, label=label)
ax.set_xscale("log")
ax.set_xlabel("distinct letters k")
ax.set_ylabel("total modified redundancy (bits)")
ax.legend()
fig.tight_layout()
fig.savefig({png_name!r}, dpi=150)
print("wrote", {png_name!r})
'''


def emit_plot_script(rows: list[SweepRow], path: str | Path) -> tuple[Path, Path]:
    """Write ``<path>.csv`` plus a standalone matplotlib script ``<path>_plot.py``
    that renders total redundancy against letter count, one curve per scheme
    and one dashed curve per matching bound. Returns both paths."""
    if not rows:
        raise ValueError("no rows to plot")
    path = Path(path)
    csv_path = path.with_name(path.name + ".csv")
    script_path = path.with_name(path.name + "_plot.py")
    write_rows_csv(rows, csv_path)
    script = _PLOT_TEMPLATE.format(
        csv_name=csv_path.name, png_name=path.name + ".png"
    )
    script_path.write_text(script)
    return csv_path, script_path


# --- distinguishability experiments ------------------------------------------------


@dataclass
class DistinguishabilityReport:
    """Monte-Carlo view of how often the ML estimate leaves its grid cell.

    ``p_deviation`` is the chance any raw component misses its source value
    by at least half the local grid spacing; ``p_sorted_deviation`` is the
    same event for the ordered estimate (the one available from the pattern
    alone), which can only be rarer. ``p_outside_sphere`` tracks escapes from
    the distinguishability radius n**(-(1-eps)/2).
    """

    theta: np.ndarray
    trials: int
    p_deviation: float
    p_sorted_deviation: float
    p_outside_sphere: float
    mean_deviation: np.ndarray


def distinguishability_experiment(
    n: int, k: int, eps: float, trials: int, seed: int
) -> DistinguishabilityReport:
    """Sample a lower-grid source, draw ``trials`` length-``n`` sequences,
    and measure the estimator-deviation events.

    The source's k-1 smallest components sit exactly on the grid; the largest
    holds the residual, so its nearest lower grid point supplies the local
    spacing. All events are evaluated on multinomial counts; the letter
    identities never matter.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if k == 1:
        return DistinguishabilityReport(
            theta=np.array([1.0]),
            trials=trials,
            p_deviation=0.0,
            p_sorted_deviation=0.0,
            p_outside_sphere=0.0,
            mean_deviation=np.zeros(1),
        )
    rng = make_rng(seed, n, k)
    theta, picks = _lower_grid_source(rng, n, eps, k)
    grid = make_grid(n, eps, "lower")
    spacing = np.array([grid.spacing(b) for b in picks])

    counts = rng.multinomial(n, theta, size=trials)
    estimates = counts / n
    deviations = estimates - theta
    any_dev = np.any(np.abs(deviations) >= spacing / 2.0, axis=1)
    sorted_dev = np.abs(np.sort(estimates, axis=1) - theta) >= spacing / 2.0
    radius = n ** (-0.5 * (1.0 - eps))
    outside = np.linalg.norm(deviations, axis=1) > radius
    return DistinguishabilityReport(
        theta=theta,
        trials=trials,
        p_deviation=float(any_dev.mean()),
        p_sorted_deviation=float(np.any(sorted_dev, axis=1).mean()),
        p_outside_sphere=float(outside.mean()),
        mean_deviation=deviations.mean(axis=0),
    )


# --- entropy gap ---------------------------------------------------------------------


@dataclass
class EntropyGapReport:
    """Uniform-source comparison of letter-level cost, pattern entropy, and
    what the known-size pattern coder actually spends."""

    n: int
    k: int
    samples: int
    iid_bits: float
    pattern_bits: float
    pattern_sigma: float
    coded_bits: float
    coded_sigma: float


def entropy_gap_experiment(
    k: int, n: int, samples: int, seed: int, theta=None
) -> EntropyGapReport:
    """Estimate the pattern-vs-letters entropy gap, alongside the average
    known-size pattern code length. The source is uniform on ``k`` letters
    unless an explicit ``theta`` of that length is given.

    Guarded to k <= 20: the entropy estimate needs exact per-pattern
    probabilities. For a uniform source with k past e**(19/18) * n**(1/3) the
    pattern quantities drop visibly below ``n * log2(k)``.
    """
    if not 1 <= k <= MAX_MODEL_ALPHABET:
        raise ValueError(f"letter count must lie in 1..{MAX_MODEL_ALPHABET}")
    if n < 1:
        raise ValueError("sequence length must be positive")
    if samples < 2:
        raise ValueError("need at least two samples")
    if theta is None:
        theta = np.full(k, 1.0 / k)
    else:
        theta = as_param_vector(np.asarray(theta, dtype=np.float64))
        if theta.shape != (k,):
            raise ValueError("theta length must match the letter count")
    iid_bits = float(n * -(theta * np.log2(theta)).sum())
    pattern_bits, pattern_sigma = pattern_entropy_mc(theta, n, samples=samples, seed=seed)

    rng = make_rng(seed, 3, k)
    lengths = np.empty(samples)
    for i in range(samples):
        seq = rng.choice(k, size=n, p=theta) + 1
        pattern = extract_pattern_array(seq)
        occ, dis = pattern_prefix_stats(pattern)
        lengths[i] = models.known_k_bits_from_stats(occ, dis, int(pattern.max())).sum()
    return EntropyGapReport(
        n=n,
        k=k,
        samples=samples,
        iid_bits=iid_bits,
        pattern_bits=pattern_bits,
        pattern_sigma=pattern_sigma,
        coded_bits=float(lengths.mean()),
        coded_sigma=float(lengths.std(ddof=1) / math.sqrt(samples)),
    )
