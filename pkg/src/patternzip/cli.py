"""Command-line front end.

Thin shell over the library: compress/decompress move whole files through the
container format, sweep/bounds/entropy expose the measurement harness and the
closed-form ceilings, and verify replays the fast invariant checks. Every
subcommand is deterministic given its flags; worker count for sweeps is
capped by the PATTERNZIP_THREADS environment variable.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from patternzip import bounds, lab


def _eps_arg(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError("eps must lie strictly between 0 and 1")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _k_list(text: str) -> tuple[int, ...]:
    try:
        ks = tuple(int(part) for part in text.split(",") if part)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad k list: {text!r}")
    if not ks or min(ks) < 1:
        raise argparse.ArgumentTypeError("k list needs positive integers")
    return ks


def _scheme_list(text: str) -> tuple[str, ...]:
    schemes = tuple(part.strip() for part in text.split(",") if part.strip())
    unknown = set(schemes) - set(lab.SCHEMES)
    if not schemes or unknown:
        raise argparse.ArgumentTypeError(
            f"schemes must be a comma list from {', '.join(lab.SCHEMES)}"
        )
    return schemes


def _worker_cap(requested: int) -> int:
    cap = os.environ.get("PATTERNZIP_THREADS", "")
    if cap.isdigit() and int(cap) >= 1:
        return min(requested, int(cap))
    return requested


def default_k_grid(n: int, count: int = 40, k_max: int = 1000) -> tuple[int, ...]:
    """Roughly ``count`` log-spaced letter counts in [2, min(k_max, n)]."""
    top = min(k_max, n)
    if top < 2:
        raise ValueError("need room for at least two letters")
    import numpy as np

    raw = np.unique(np.round(np.logspace(math.log10(2), math.log10(top), count)))
    return tuple(int(v) for v in raw)


# --- subcommands -------------------------------------------------------------


def cmd_compress(args: argparse.Namespace) -> int:
    from patternzip.coder import compress
    from patternzip.models import modified_redundancy
    from patternzip.patterns import extract_pattern, tokenize

    data = Path(args.input).read_bytes()
    container = compress(data, model=args.model, eps=args.eps, tokens=args.tokens)
    blob = container.to_bytes()
    Path(args.output).write_bytes(blob)

    pattern = extract_pattern(tokenize(data, args.tokens))
    report = modified_redundancy(float(container.payload.bit_length), pattern)
    print(f"n={report.n} k={report.k} model={args.model}")
    print(f"pattern bits:        {report.bits:.3f}")
    print(f"neg log2 P_ML:       {report.neg_log_pml:.3f}")
    print(f"modified redundancy: {report.modified_redundancy:.6f} bits/symbol")
    print(f"container:           {len(blob)} bytes -> {args.output}")
    return 0


def cmd_decompress(args: argparse.Namespace) -> int:
    from patternzip.coder import decompress

    data = Path(args.input).read_bytes()
    out = decompress(data)
    Path(args.output).write_bytes(out)
    print(f"{len(out)} bytes -> {args.output}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.full_sweep:
        ks = tuple(range(2, min(1000, args.n) + 1))
    elif args.k_list is not None:
        ks = args.k_list
    else:
        ks = default_k_grid(args.n)
    config = lab.SweepConfig(
        n=args.n,
        ks=ks,
        eps=args.eps,
        schemes=args.schemes,
        mode="worst-case" if args.worst_case else "sampled",
        trials=args.trials,
        master_seed=args.seed,
        prior=args.prior,
    )
    rows = lab.run_sweep(config, workers=_worker_cap(args.workers))
    if args.out:
        lab.write_rows_csv(rows, args.out)
        print(f"{len(rows)} rows -> {args.out}", file=sys.stderr)
        if args.plot:
            csv_path, script_path = lab.emit_plot_script(rows, args.plot)
            print(f"plot inputs -> {csv_path}, {script_path}", file=sys.stderr)
    else:
        sys.stdout.write(",".join(lab._CSV_FIELDS) + "\n")
        for row in rows:
            sys.stdout.write(
                f"{row.scheme},{row.n},{row.k},{row.eps!r},{row.seed},"
                f"{row.bits!r},{row.neg_log_pml!r},"
                f"{row.modified_redundancy!r},{row.bound_value!r}\n"
            )
    return 0


_BOUND_HEADER = ("bound", "region", "bits_per_symbol", "total_bits")


def bound_table(n: int, k: int, eps: float) -> list[tuple[str, str, float, float]]:
    """The five bound families at one (n, k, eps) cell, rates and totals."""
    cfg = bounds.BoundConfig(n=n, k=k, eps=eps)
    rows = []
    for name, fn in (
        ("minimax-lower", bounds.minimax_lower_bound),
        ("most-sources-lower", bounds.most_sources_lower_bound),
        ("achievable-upper", bounds.achievable_upper_bound),
    ):
        rep = fn(cfg)
        rate = rep.value + rep.o_term
        rows.append((name, rep.region, rate, n * rate))
    for name, total in (
        ("known-k-coder", bounds.known_k_bits_bound(n, k)),
        ("unknown-k-coder", bounds.unknown_k_bits_bound(n, k, eps)),
    ):
        rows.append((name, "-", total / n, total))
    return rows


def cmd_bounds(args: argparse.Namespace) -> int:
    rows = bound_table(args.n, args.k, args.eps)
    if args.format == "csv":
        print("n,k,eps," + ",".join(_BOUND_HEADER))
        for name, region, rate, total in rows:
            print(f"{args.n},{args.k},{args.eps!r},{name},{region},{rate!r},{total!r}")
    else:
        print(f"n={args.n} k={args.k} eps={args.eps}")
        print(f"{'bound':<20}{'region':<10}{'bits/symbol':>14}{'total bits':>14}")
        for name, region, rate, total in rows:
            print(f"{name:<20}{region:<10}{rate:>14.6g}{total:>14.6g}")
    return 0


def cmd_entropy(args: argparse.Namespace) -> int:
    theta = None
    if args.dist == "zipf":
        theta = lab.resolve_theta(lab.SourceSpec(k=args.k, prior="zipf", s=args.s), args.n)
    report = lab.entropy_gap_experiment(
        args.k, args.n, args.samples, args.seed, theta=theta
    )
    print(f"k={report.k} n={report.n} dist={args.dist} samples={report.samples}")
    print(f"letter cost n*H:   {report.iid_bits:.2f} bits")
    print(f"pattern entropy:   {report.pattern_bits:.2f} +- {report.pattern_sigma:.2f} bits")
    print(f"pattern coder avg: {report.coded_bits:.2f} +- {report.coded_sigma:.2f} bits")
    print(f"gap (letters - pattern entropy): {report.iid_bits - report.pattern_bits:.2f} bits")
    return 0


# --- verify ------------------------------------------------------------------


def _verify_roundtrip() -> str | None:
    from patternzip.coder import compress, decompress
    from patternzip.exact import all_patterns

    rng_texts = [bytes([(i * 7 + j * j) % 5 + 65 for j in range(40)]) for i in range(4)]
    for n in range(1, 7):
        for pattern in all_patterns(n):
            data = bytes(64 + j for j in pattern)
            for model in ("known-k", "mixture", "unknown-k", "two-part"):
                if model == "mixture" and n < 2:
                    continue
                if decompress(compress(data, model=model).to_bytes()) != data:
                    return f"round trip broke: model={model} pattern={pattern}"
    for data in rng_texts:
        for model in ("known-k", "mixture", "unknown-k", "two-part"):
            if decompress(compress(data, model=model).to_bytes()) != data:
                return f"round trip broke on random text: model={model}"
    return None


def _verify_known_k_is_shifted_iid() -> str | None:
    from patternzip.exact import all_patterns
    from patternzip.models import assign_log_prob, kt_iid_model, known_k_pattern_bits

    for n in range(1, 7):
        for pattern in all_patterns(n):
            k = max(pattern)
            gap = assign_log_prob(kt_iid_model(k), pattern) - known_k_pattern_bits(pattern, k)
            if abs(gap - math.log2(math.factorial(k))) > 1e-9:
                return f"letter/pattern gap is not log2(k!) at {pattern}"
    return None


def _verify_probabilities_sum_to_one() -> str | None:
    import numpy as np

    from patternzip.exact import all_patterns, pattern_prob

    rng = np.random.default_rng(0)
    for dim in (2, 3, 4):
        theta = np.sort(rng.dirichlet(np.ones(dim)))
        for n in (5, 6):
            total = sum(pattern_prob(theta, p) for p in all_patterns(n))
            if abs(total - 1.0) > 1e-9:
                return f"pattern probabilities sum to {total} at n={n}, dim={dim}"
    return None


def _verify_bound_ordering() -> str | None:
    for n in (10**5, 10**7, 10**9):
        for eps in (0.1, 0.3):
            for k in (2, 10, 100, 1000, 10**4):
                cfg = bounds.BoundConfig(n=n, k=k, eps=eps)
                low = bounds.most_sources_lower_bound(cfg).value
                mid = bounds.minimax_lower_bound(cfg).value
                high = bounds.achievable_upper_bound(cfg).value
                if not low <= mid <= high:
                    return f"bound ordering broke at n={n}, k={k}, eps={eps}"
    return None


def _verify_partitions() -> str | None:
    from patternzip.exact import partition_count, partition_rank, partition_unrank

    if partition_count(100) != 190569292:
        return "partition count at 100 is off"
    for n in (9, 12):
        for i in range(partition_count(n)):
            if partition_rank(partition_unrank(n, i)) != i:
                return f"rank/unrank mismatch at n={n}, index {i}"
    return None


def _verify_sweep_rows() -> str | None:
    config = lab.SweepConfig(
        n=256, ks=(2, 5, 11), schemes=("known-k", "unknown-k"), mode="sampled", trials=2
    )
    for row in lab.run_sweep(config):
        if abs(row.modified_redundancy - (row.bits - row.neg_log_pml) / row.n) > 1e-9:
            return f"inconsistent sweep row: {row}"
        if row.n * row.modified_redundancy > row.bound_value + 1.0:
            return f"sequential coder exceeded its ceiling: {row}"
    return None


_VERIFY_SUITES = (
    ("container round trip, all models, exhaustive n <= 6", _verify_roundtrip),
    ("known-size pattern coder = letter coder - log2(k!)", _verify_known_k_is_shifted_iid),
    ("exact pattern probabilities sum to 1", _verify_probabilities_sum_to_one),
    ("lower bounds below the achievable bound", _verify_bound_ordering),
    ("partition count and rank/unrank", _verify_partitions),
    ("sweep rows consistent and within ceilings", _verify_sweep_rows),
)


def cmd_verify(args: argparse.Namespace) -> int:
    failures = 0
    for label, suite in _VERIFY_SUITES:
        problem = suite()
        if problem is None:
            print(f"ok   {label}")
        else:
            failures += 1
            print(f"FAIL {label}: {problem}")
    if failures:
        print(f"{failures} of {len(_VERIFY_SUITES)} suites failed")
        return 1
    print(f"all {len(_VERIFY_SUITES)} suites passed")
    return 0


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patternzip",
        description="Pattern-based compression, redundancy sweeps, and bound tables.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    c = sub.add_parser("compress", help="compress a file through the pattern coder")
    c.add_argument("input", help="file to compress")
    c.add_argument("output", help="container destination")
    c.add_argument("--model", default="known-k",
                   choices=("known-k", "mixture", "unknown-k", "two-part"))
    c.add_argument("--eps", type=_eps_arg, default=0.1,
                   help="growth-rate parameter for unknown-k and two-part")
    c.add_argument("--tokens", default="bytes", choices=("bytes", "words"),
                   help="tokenize per byte or per word/whitespace run")
    c.set_defaults(run=cmd_compress)

    d = sub.add_parser("decompress", help="restore a file from a container")
    d.add_argument("input", help="container file")
    d.add_argument("output", help="restored destination")
    d.set_defaults(run=cmd_decompress)

    s = sub.add_parser("sweep", help="measure coder redundancy across letter counts")
    s.add_argument("--n", type=_positive_int, required=True, help="sequence length")
    s.add_argument("--eps", type=_eps_arg, default=0.1)
    s.add_argument("--schemes", type=_scheme_list,
                   default=("known-k", "unknown-k"),
                   help=f"comma list from: {', '.join(lab.SCHEMES)}")
    s.add_argument("--k-list", type=_k_list, default=None,
                   help="explicit letter counts (default: ~40 log-spaced in [2,1000])")
    s.add_argument("--full-sweep", action="store_true",
                   help="every k in [2, min(1000, n)] instead of the log grid")
    s.add_argument("--worst-case", action="store_true",
                   help="use the deterministic worst-case family instead of sampling")
    s.add_argument("--prior", default="uniform", choices=("uniform", "zipf", "grid"))
    s.add_argument("--trials", type=_positive_int, default=1,
                   help="sequences per letter count in sampled mode")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=_positive_int, default=1,
                   help="cell-level threads (capped by PATTERNZIP_THREADS)")
    s.add_argument("--out", default=None, help="CSV destination (default stdout)")
    s.add_argument("--plot", default=None,
                   help="also emit <path>.csv and <path>_plot.py (needs --out)")
    s.set_defaults(run=cmd_sweep)

    b = sub.add_parser("bounds", help="print the bound families at one (n, k, eps)")
    b.add_argument("--n", type=_positive_int, required=True)
    b.add_argument("--k", type=_positive_int, required=True)
    b.add_argument("--eps", type=_eps_arg, default=0.1)
    b.add_argument("--format", default="table", choices=("table", "csv"))
    b.set_defaults(run=cmd_bounds)

    e = sub.add_parser("entropy", help="pattern-vs-letters entropy gap experiment")
    e.add_argument("--k", type=_positive_int, required=True)
    e.add_argument("--n", type=_positive_int, required=True)
    e.add_argument("--dist", default="uniform", choices=("uniform", "zipf"))
    e.add_argument("--s", type=float, default=1.0, help="zipf exponent")
    e.add_argument("--samples", type=_positive_int, default=500)
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(run=cmd_entropy)

    v = sub.add_parser("verify", help="run the fast invariant suites")
    v.set_defaults(run=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
