import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binomtest

from corefguard.coref_metrics import STAT_KEYS, conll_f1_from_vector, counts_row, metric_counts
from corefguard.exceptions import StrataMismatch
from corefguard.sigtest import (
    PairedBinaryOutcomes,
    StratifiedScores,
    align_strata,
    f1_from_counts,
    mcnemar_exact,
    parse_stats_file,
    stratified_randomization_test,
)


def uniform_margin(n_strata=20):
    a = np.tile([8.0, 2.0, 2.0], (n_strata, 1))
    b = np.tile([5.0, 5.0, 5.0], (n_strata, 1))
    return StratifiedScores(a, b, f1_from_counts)


def test_mcnemar_known_value():
    assert mcnemar_exact(PairedBinaryOutcomes(10, 2)) == pytest.approx(158 / 4096, abs=1e-12)


def test_mcnemar_matches_scipy_and_is_symmetric():
    for b in range(31):
        for c in range(31):
            p = mcnemar_exact(PairedBinaryOutcomes(b, c))
            assert p == mcnemar_exact(PairedBinaryOutcomes(c, b))
            if b == c:
                assert p == 1.0
            if b + c:
                assert p == pytest.approx(binomtest(b, b + c, 0.5).pvalue, abs=1e-12)


def test_outcomes_from_correctness():
    o = PairedBinaryOutcomes.from_correctness([1, 1, 0, 0, 1], [0, 1, 1, 0, 0])
    assert (o.b, o.c) == (2, 1)
    with pytest.raises(ValueError):
        PairedBinaryOutcomes.from_correctness([1], [])
    with pytest.raises(ValueError):
        PairedBinaryOutcomes(-1, 0)


def test_identical_systems_give_one():
    s = uniform_margin()
    s = StratifiedScores(s.a, s.a.copy(), f1_from_counts)
    assert stratified_randomization_test(s, rounds=500, seed=1) == 1.0


def test_uniform_margin_is_significant_for_every_seed():
    for seed in range(10):
        p = stratified_randomization_test(uniform_margin(), rounds=9999, seed=seed)
        assert 1 / 10000 <= p <= 0.05


def test_seed_reproducible():
    s = StratifiedScores(np.random.default_rng(0).integers(0, 9, (8, 3)), np.random.default_rng(1).integers(0, 9, (8, 3)),
                         f1_from_counts)
    assert stratified_randomization_test(s, 300, 5) == stratified_randomization_test(s, 300, 5)


def exact_permutation_p(a, b, metric):
    observed = abs(metric(a.sum(0)) - metric(b.sum(0)))
    hits = total = 0
    for flips in itertools.product((False, True), repeat=len(a)):
        f = np.array(flips)
        x = np.where(f[:, None], b, a).sum(0)
        y = np.where(f[:, None], a, b).sum(0)
        hits += abs(metric(x) - metric(y)) >= observed - 1e-12
        total += 1
    return hits / total


def test_approximates_exact_permutation_distribution():
    rng = np.random.default_rng(3)
    a = rng.integers(1, 10, (7, 3)).astype(float)
    b = rng.integers(1, 10, (7, 3)).astype(float)
    exact = exact_permutation_p(a, b, f1_from_counts)
    rounds = 20000
    p = stratified_randomization_test(StratifiedScores(a, b, f1_from_counts), rounds, seed=0)
    se = np.sqrt(exact * (1 - exact) / rounds)
    assert abs(p - exact) < 4 * se + 1 / rounds


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32), st.integers(1, 50))
def test_p_value_bounds(n, seed, rounds):
    rng = np.random.default_rng(seed)
    s = StratifiedScores(rng.integers(0, 5, (n, 3)), rng.integers(0, 5, (n, 3)), f1_from_counts)
    p = stratified_randomization_test(s, rounds, seed)
    assert 1 / (rounds + 1) <= p <= 1.0


def test_shape_and_rounds_validation():
    with pytest.raises(StrataMismatch):
        StratifiedScores(np.zeros((2, 3)), np.zeros((3, 3)), f1_from_counts)
    with pytest.raises(ValueError):
        stratified_randomization_test(uniform_margin(), rounds=0)


def test_stats_file_round_trip_and_alignment():
    c1 = {k: metric_counts(k, [[1, 2, 3]], [[1, 2], [3]]) for k in ("muc", "b_cubed", "ceaf_e")}
    c2 = {k: metric_counts(k, [[1, 2]], [[1, 2]]) for k in ("muc", "b_cubed", "ceaf_e")}
    text_a = counts_row(("d1", 0), c1) + "\n" + counts_row(("d2", 0), c2) + "\n"
    text_b = counts_row(("d2", 0), c2) + "\n" + counts_row(("d1", 0), c1) + "\n"
    ids_a, a = parse_stats_file(text_a, STAT_KEYS)
    ids_b, b = parse_stats_file(text_b, STAT_KEYS)
    assert ids_a == ["d1:0", "d2:0"]
    a, b = align_strata(ids_a, a, ids_b, b)
    assert np.array_equal(a, b)
    assert conll_f1_from_vector(a[1]) == 1.0
    with pytest.raises(StrataMismatch):
        align_strata(ids_a, a, ids_a[:1], b[:1])
    with pytest.raises(ValueError):
        parse_stats_file("doc=x tp\n")
    with pytest.raises(ValueError):
        parse_stats_file("doc=x tp=1\n", ("tp", "fp"))
