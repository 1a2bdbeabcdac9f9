"""Exact pattern probability, entropy, ML, partition, and type-code tests."""

import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patternzip.coder import arith_decode, arith_encode
from patternzip.exact import (
    PatternSourceModel,
    all_patterns,
    partition_count,
    partition_rank,
    partition_type,
    partition_unrank,
    pattern_entropy_exhaustive,
    pattern_entropy_mc,
    pattern_log2_prob,
    pattern_log2_prob_from_counts,
    pattern_ml_estimate,
    pattern_prob,
    pattern_prob_bruteforce,
    prefix_conditionals,
    type_code_decode,
    type_code_encode,
)
from patternzip.patterns import extract_pattern, occurrence_counts, permute_params


def entropy_bruteforce(n: int, theta) -> float:
    """Pattern entropy by enumerating raw sequences; independent of the
    injection-sum machinery."""
    theta = np.asarray(theta, dtype=float)
    acc: dict[tuple, float] = {}
    for seq in product(range(theta.size), repeat=n):
        p = 1.0
        for s in seq:
            p *= theta[s]
        key = tuple(extract_pattern(seq))
        acc[key] = acc.get(key, 0.0) + p
    return -sum(p * math.log2(p) for p in acc.values() if p > 0)


# --- probabilities --------------------------------------------------------------


def test_pattern_prob_hand_values():
    assert pattern_prob((0.3, 0.7), [1]) == pytest.approx(1.0, abs=1e-12)
    assert pattern_prob((0.3, 0.7), [1, 1]) == pytest.approx(0.58, abs=1e-12)
    assert pattern_prob((0.3, 0.7), [1, 2]) == pytest.approx(0.42, abs=1e-12)
    assert pattern_prob((0.3, 0.7), [1, 1, 2]) == pytest.approx(0.21, abs=1e-12)
    assert pattern_prob((0.5, 0.5), [1, 1, 2]) == pytest.approx(0.25, abs=1e-12)
    # All-distinct pattern: k! times the product of the parameters.
    assert pattern_prob((0.2, 0.3, 0.5), [1, 2, 3]) == pytest.approx(0.18, abs=1e-12)
    # Uniform source: probability depends only on the distinct count.
    assert pattern_prob((1 / 3, 1 / 3, 1 / 3), [1, 1, 2]) == pytest.approx(
        2 / 9, rel=1e-12
    )


def test_pattern_prob_rejects_bad_inputs():
    with pytest.raises(ValueError, match="not a valid pattern"):
        pattern_log2_prob((0.5, 0.5), [2, 1])
    with pytest.raises(ValueError, match="sum to 1"):
        pattern_prob((0.3, 0.3), [1])
    with pytest.raises(ValueError, match="positive"):
        pattern_prob((1.0, 0.0), [1])
    with pytest.raises(ValueError, match="Monte Carlo"):
        pattern_prob(np.full(26, 1 / 26), [1])


def test_pattern_prob_more_indices_than_letters():
    assert pattern_prob((0.5, 0.5), [1, 2, 3]) == 0.0


def test_injection_sum_matches_bruteforce_small():
    thetas = [(0.5, 0.5), (0.1, 0.9), (0.2, 0.3, 0.5), (0.6, 0.3, 0.1)]
    for n in range(1, 6):
        for pattern in all_patterns(n):
            for th in thetas:
                if max(pattern) > len(th):
                    continue
                exact = pattern_prob(th, pattern)
                brute = pattern_prob_bruteforce(th, pattern)
                assert exact == pytest.approx(brute, rel=1e-10, abs=1e-14)


def test_pattern_probs_sum_to_one():
    for th in [(0.2, 0.3, 0.5), (0.9, 0.05, 0.05)]:
        total = sum(pattern_prob(th, p) for p in all_patterns(5))
        assert total == pytest.approx(1.0, abs=1e-9)


def test_pattern_prob_symmetric_under_parameter_permutation():
    rng = np.random.default_rng(41)
    from itertools import permutations

    for _ in range(10):
        th = rng.dirichlet(np.ones(4)) + 1e-3
        th = th / th.sum()
        for pattern in ([1, 1, 2, 3], [1, 2, 2, 1, 3, 4], [1, 1, 1, 2]):
            base = pattern_prob(th, pattern)
            for sigma in permutations(range(1, 5)):
                assert pattern_prob(
                    permute_params(th, list(sigma)), pattern
                ) == pytest.approx(base, rel=1e-9)


def test_exact_and_float_paths_agree_on_moderate_case():
    # n = 60 stays inside the exact-rational branch; a sequential product of
    # the same quantity runs entirely through the float DP.
    rng = np.random.default_rng(23)
    th = np.array([0.1, 0.15, 0.25, 0.5])
    seq = rng.choice(4, size=60, p=th)
    pattern = extract_pattern(seq)
    lg = pattern_log2_prob(th, pattern)
    steps = prefix_conditionals(th, pattern)
    assert float(np.sum(np.log2(steps))) == pytest.approx(lg, rel=1e-9)


def test_all_patterns_counts_are_bell_numbers():
    # 1, 2, 5, 15, 52, 203 set partitions for n = 1..6.
    sizes = [sum(1 for _ in all_patterns(n)) for n in range(1, 7)]
    assert sizes == [1, 2, 5, 15, 52, 203]


# --- sequential model -----------------------------------------------------------


def test_source_model_conditionals_are_probability_ratios():
    th = (0.2, 0.3, 0.5)
    model = PatternSourceModel(th)
    prefix = [1, 1, 2]
    for j in prefix:
        model.push(j)
    base = pattern_prob(th, prefix)
    for j in range(1, model.C + 2):
        expected = pattern_prob(th, prefix + [j]) / base
        assert model.conditional(j) == pytest.approx(expected, rel=1e-9)
    dist = model.step_distribution()
    assert dist.sum() == pytest.approx(1.0, abs=1e-9)
    assert model.log2_prefix_prob == pytest.approx(
        pattern_log2_prob(th, prefix), rel=1e-9
    )


def test_source_model_exhausts_alphabet():
    model = PatternSourceModel((0.4, 0.6))
    model.push(1)
    model.push(2)
    assert model.conditional(3) == 0.0
    assert model.step_distribution()[2] == 0.0
    with pytest.raises(ValueError, match="alphabet exhausted"):
        model.push(3)


def test_prefix_conditionals_telescope():
    th = (0.25, 0.25, 0.5)
    pattern = [1, 2, 1, 3, 2]
    steps = prefix_conditionals(th, pattern)
    assert steps.shape == (len(pattern),)
    assert steps[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(steps > 0) and np.all(steps <= 1 + 1e-12)
    assert float(np.prod(steps)) == pytest.approx(
        pattern_prob(th, pattern), rel=1e-10
    )


def test_prefix_conditionals_two_letter_example():
    steps = prefix_conditionals((0.3, 0.7), [1, 2])
    assert steps[0] == pytest.approx(1.0, abs=1e-12)
    assert steps[1] == pytest.approx(0.42, abs=1e-12)


def test_source_model_clone_is_independent():
    model = PatternSourceModel((0.3, 0.7))
    model.push(1)
    twin = model.clone()
    model.push(2)
    assert twin.t == 1 and model.t == 2
    assert twin.counts == [1]


def test_source_model_coder_round_trip():
    rng = np.random.default_rng(17)
    th = np.array([0.1, 0.15, 0.25, 0.5])
    for _ in range(5):
        seq = rng.choice(4, size=80, p=th)
        pattern = extract_pattern(seq)
        payload = arith_encode(PatternSourceModel(th), pattern)
        assert arith_decode(PatternSourceModel(th), payload, len(pattern)) == pattern
        ideal = -pattern_log2_prob(th, pattern)
        assert payload.bit_length <= math.ceil(ideal) + 2


def test_source_model_survives_heavy_skew():
    # Near-tied counts under a lopsided source: the alternating-sum form
    # loses every digit here, the positive scan must not.
    th = np.array([0.02, 0.98])
    pattern = [1, 2] * 200
    steps = prefix_conditionals(th, pattern)
    assert float(np.sum(np.log2(steps))) == pytest.approx(
        pattern_log2_prob(th, pattern), rel=1e-9
    )
    payload = arith_encode(PatternSourceModel(th), pattern)
    assert arith_decode(PatternSourceModel(th), payload, len(pattern)) == pattern
    ideal = -pattern_log2_prob(th, pattern)
    assert payload.bit_length <= math.ceil(ideal) + 2


def test_source_model_log_scan_fallback():
    # Tied large counts with a wide parameter split force the log-domain
    # letter scan; the conditionals must still telescope.
    th = np.array([0.85, 0.15])
    pattern = [1, 2] * 300
    steps = prefix_conditionals(th, pattern)
    lg = pattern_log2_prob(th, pattern)
    assert lg == pytest.approx(1 + 600 * math.log2(0.85 * 0.15) / 2, rel=1e-12)
    assert float(np.sum(np.log2(steps))) == pytest.approx(lg, rel=1e-9)


# --- entropies ------------------------------------------------------------------


def test_entropy_exhaustive_matches_bruteforce():
    for th in [(0.2, 0.8), (0.5, 0.5), (0.3, 0.3, 0.4)]:
        for n in (3, 5):
            assert pattern_entropy_exhaustive(th, n) == pytest.approx(
                entropy_bruteforce(n, th), rel=1e-10
            )


def test_entropy_mc_agrees_with_exhaustive():
    th = (0.2, 0.8)
    n = 6
    exact = pattern_entropy_exhaustive(th, n)
    est, se = pattern_entropy_mc(th, n, samples=4000, seed=3)
    assert abs(est - exact) <= max(5 * se, 0.02)
    again, _ = pattern_entropy_mc(th, n, samples=4000, seed=3)
    assert again == est


def test_entropy_mc_uniform_fast_path():
    th = (0.25, 0.25, 0.25, 0.25)
    n = 7
    exact = pattern_entropy_exhaustive(th, n)
    est, se = pattern_entropy_mc(th, n, samples=6000, seed=11)
    assert abs(est - exact) <= max(5 * se, 0.02)


def test_entropy_mc_single_letter_source_is_zero():
    est, se = pattern_entropy_mc((1.0,), 50, samples=200, seed=5)
    assert est == 0.0
    assert se == 0.0


# --- maximum likelihood -----------------------------------------------------------


def test_ml_estimate_uniform_cases():
    theta, lg = pattern_ml_estimate([1, 2], restarts=4)
    assert np.allclose(theta, [0.5, 0.5], atol=1e-4)
    assert lg == pytest.approx(-1.0, abs=1e-8)
    theta, lg = pattern_ml_estimate([1, 1, 2], restarts=4)
    assert np.allclose(theta, [0.5, 0.5], atol=1e-4)
    assert lg == pytest.approx(-2.0, abs=1e-8)


def test_ml_estimate_matches_grid_oracle():
    # Dense 1-D scan over the ordered two-letter simplex.
    grid = np.arange(1e-4, 0.5 + 1e-9, 1e-4)
    best = -math.inf
    best_a = None
    for a in grid:
        lg = pattern_log2_prob_from_counts((a, 1 - a), [2, 1])
        if lg > best:
            best, best_a = lg, a
    theta, lg = pattern_ml_estimate([1, 1, 2], restarts=4)
    assert lg >= best - 1e-6
    assert abs(theta[0] - best_a) <= 2e-4


def test_ml_estimate_skewed_case():
    # For one index seen four times and another once, the optimum puts
    # theta*(1-theta) = 1/6, giving probability 1/12.
    theta, lg = pattern_ml_estimate([1, 1, 1, 1, 2], restarts=6)
    lo = (3 - math.sqrt(3)) / 6
    assert np.allclose(theta, [lo, 1 - lo], atol=1e-4)
    assert lg == pytest.approx(-math.log2(12), abs=1e-7)


def test_ml_estimate_rejects_oversized_k():
    with pytest.raises(ValueError, match="Monte Carlo"):
        pattern_ml_estimate([1, 2], k=13)


@settings(deadline=None, max_examples=15)
@given(st.lists(st.integers(min_value=0, max_value=3), min_size=2, max_size=12))
def test_ml_estimate_beats_empirical(raw):
    pattern = extract_pattern(raw)
    counts = np.asarray(occurrence_counts(pattern), dtype=float)
    emp = counts / counts.sum()
    _, lg = pattern_ml_estimate(pattern, restarts=2)
    assert lg >= pattern_log2_prob_from_counts(emp, counts.astype(int)) - 1e-9


# --- partitions and the type code -------------------------------------------------


def test_partition_type_fields():
    ptype = partition_type([1, 2, 1, 1, 3, 2])
    assert ptype.parts == (3, 2, 1)
    assert ptype.n == 6
    assert ptype.distinct == 3
    with pytest.raises(ValueError):
        from patternzip.exact import PartitionType

        PartitionType((1, 2))


def test_partition_count_known_values():
    known = [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42]
    assert [partition_count(n) for n in range(11)] == known
    assert partition_count(64) == 1741630
    assert partition_count(100) == 190569292


def test_partition_order_for_five():
    expected = [
        [5],
        [4, 1],
        [3, 2],
        [3, 1, 1],
        [2, 2, 1],
        [2, 1, 1, 1],
        [1, 1, 1, 1, 1],
    ]
    assert [partition_unrank(5, r) for r in range(partition_count(5))] == expected


def test_partition_rank_unrank_bijection():
    for n in range(1, 13):
        seen = set()
        for r in range(partition_count(n)):
            parts = partition_unrank(n, r)
            assert sum(parts) == n
            assert partition_rank(parts) == r
            seen.add(tuple(parts))
        assert len(seen) == partition_count(n)


def test_partition_rank_extremes():
    for n in (1, 7, 30, 100):
        assert partition_rank([n]) == 0
        assert partition_rank([1] * n) == partition_count(n) - 1
        assert partition_unrank(n, 0) == [n]


def test_partition_rank_rejects_bad_parts():
    with pytest.raises(ValueError):
        partition_rank([1, 2])
    with pytest.raises(ValueError):
        partition_rank([0, 1])
    with pytest.raises(ValueError):
        partition_unrank(5, 7)


def test_type_code_round_trip_and_length():
    rng = np.random.default_rng(29)
    for n, k in [(10, 3), (40, 5), (80, 8), (120, 2)]:
        seq = rng.integers(0, k, size=n)
        pattern = extract_pattern(seq)
        bits = type_code_encode(pattern)
        assert type_code_decode(bits, n) == pattern
        counts = sorted(occurrence_counts(pattern), reverse=True)
        emp = np.asarray(counts, dtype=float) / n
        ideal = -pattern_log2_prob_from_counts(emp, counts)
        width = max(1, (partition_count(n) - 1).bit_length())
        assert bits.bit_length <= width + math.ceil(ideal) + 2


def test_type_code_single_index_pattern():
    pattern = [1] * 25
    bits = type_code_encode(pattern)
    assert type_code_decode(bits, 25) == pattern
    # Payload is free once the counts say everything: just the rank field.
    assert bits.bit_length <= max(1, (partition_count(25) - 1).bit_length())
