import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from comprates import construction as cx
from comprates import estimators as est
from comprates.construction import make_geometry
from comprates.core import Sample, empirical_risk, true_risk

OI_32_2 = make_geometry(32, 2, "oi")
OD_16_2 = make_geometry(16, 2, "od")


def _sample(pairs):
    return Sample.from_examples(pairs)


def test_floor_constant():
    # e^4 = 54.59815..., 16 e^4 = 873.5704...
    assert est.FLOOR_CONSTANT == pytest.approx(1 / 873.5704, rel=1e-6)
    assert est.FLOOR_CONSTANT * 0.5 == pytest.approx(5.7236e-4, rel=1e-4)


def test_candidate_sets_order_independent():
    s = _sample([(5, 1), (7, 0), (21, 1), (5, 0)])
    c = est.candidate_sets(s, OI_32_2)
    assert c.per_block == ((0, 5, 7), (16, 21))
    assert not c.zero_suffix
    only_first = est.candidate_sets(_sample([(3, 1)]), OI_32_2)
    assert only_first.per_block[1] == (16,)


def test_candidate_sets_order_dependent():
    c = est.candidate_sets(_sample([(9, 1), (3, 0), (9, 0)]), OD_16_2)
    assert c.per_block == ((3, 9), (3, 9))
    assert c.zero_suffix


def test_erm_realizable_case():
    h = cx.code_to_hypothesis((5, 21), OI_32_2)
    pts = [5, 21, 0, 3, 8, 17, 30, 12]
    s = _sample([(j, h(j)) for j in pts])
    code, S = est.erm_blockwise(s, OI_32_2)
    assert code == (5, 21) and S == (5, 21)
    assert empirical_risk(cx.code_to_hypothesis(code, OI_32_2), s) == 0


def test_erm_tie_breaks_to_smallest_code():
    # one point per block, seen with both labels: every candidate errs exactly once per block
    s = _sample([(3, 0), (3, 1), (20, 0), (20, 1)])
    code, S = est.erm_blockwise(s, OI_32_2)
    assert code == (0, 16) and S == ()


def test_erm_order_dependent_uses_zero_padding():
    # code 0 is never sampled, yet the all-zero labelling fits the data best
    h = cx.code_to_hypothesis((0, 0), OD_16_2)
    s = _sample([(j, h(j)) for j in (15, 14, 13, 7)])
    code, S = est.erm_blockwise(s, OD_16_2)
    assert code == (0, 0) and S == ()
    assert empirical_risk(cx.code_to_hypothesis(code, OD_16_2), s) == 0


def test_erm_naive_enumeration_sizes():
    g = make_geometry(2, 1, "oi")
    s = _sample([(1, 1)])
    assert est.reachable_codes(s, g) == [(0,), (1,)]
    g = make_geometry(4, 2, "od")  # m=4, k=2, width 2
    s = _sample([(1, 1), (2, 0), (3, 1)])
    args = list(est._compression_arguments(s, g))
    assert len(args) == 1 + 3 + 9


def test_erm_naive_size_guard():
    g = make_geometry(2**12, 2, "od")
    s = _sample([(i, 0) for i in range(4000)])
    with pytest.raises(est.ResourceLimitError):
        est.erm_naive(s, g)


@pytest.mark.parametrize("variant", ["oi", "od"])
@pytest.mark.parametrize("n,k", [(4, 1), (6, 2), (8, 2)])
def test_oracle_equivalence(n, k, variant):
    for seed in range(200):
        g, sigma, eps, s = est.trial_inputs(n, k, variant, seed)
        fast, S = est.erm_blockwise(s, g)
        slow = est.erm_naive(s, g)
        assert empirical_risk(cx.code_to_hypothesis(fast, g), s) == empirical_risk(
            cx.code_to_hypothesis(slow, g), s
        )
        assert cx.reconstruct(S, g) == fast
        assert abs(est.reachable_min_true_risk(s, sigma, g) - est.brute_force_min_true_risk(s, sigma, g)) <= 1e-12
        assert abs(est.uc_sup_exact(s, sigma, g) - est.brute_force_uc_sup(s, sigma, g)) <= 1e-12


def test_reachable_min_with_optimal_code_sampled():
    sigma = np.array([[1, -1, 1, -1], [-1, 1, 1, -1]])
    star = cx.optimal_code(sigma, OI_32_2)
    assert star == (5, 16 + 6)
    s = _sample([(5, 0), (22, 1), (9, 1)])
    assert est.reachable_min_true_risk(s, sigma, OI_32_2) == pytest.approx(0.25, abs=1e-12)


def test_reachable_min_and_sup_with_zero_bias():
    g, sigma, _, s = est.trial_inputs(256, 4, "oi", 5, eps=0.0)
    assert est.reachable_min_true_risk(s, sigma, g, eps=0.0) == 0.5
    assert est.uc_sup_exact(s, sigma, g, eps=0.0) >= 0.0


def test_uc_sup_single_hypothesis_class():
    g = make_geometry(2, 1, "oi")  # m=2, width 1
    sigma = np.array([[1]])
    s = _sample([(0, 1), (0, 1)])  # only code 0 is reachable
    P = cx.build_distribution(sigma, g)
    h = cx.code_to_hypothesis((0,), g)
    expected = abs(empirical_risk(h, s) - true_risk(h, P))
    assert est.uc_sup_exact(s, sigma, g) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([(6, 2, "oi"), (8, 2, "od"), (9, 3, "oi"), (8, 2, "oi")]), st.integers(0, 2**64 - 1))
def test_exact_routines_match_enumeration(config, seed):
    n, k, variant = config
    g, sigma, eps, s = est.trial_inputs(n, k, variant, seed)
    assert abs(est.uc_sup_exact(s, sigma, g) - est.brute_force_uc_sup(s, sigma, g)) <= 1e-12
    assert abs(est.reachable_min_true_risk(s, sigma, g) - est.brute_force_min_true_risk(s, sigma, g)) <= 1e-12


@pytest.mark.parametrize("n,k,variant", [(32, 2, "oi"), (16, 2, "od"), (100, 3, "oi"), (1000, 4, "od")])
def test_code_true_risk_matches_full_evaluation(n, k, variant):
    g = make_geometry(n, k, variant)
    rng = np.random.default_rng(1)
    for seed in range(20):
        sigma = cx.sample_sign_matrix(g, seed)
        P = cx.build_distribution(sigma, g)
        code = tuple(
            g.code_base(t) + int(rng.integers(0, g.block_size if variant == "oi" else g.m))
            for t in range(1, k + 1)
        )
        assert abs(est.code_true_risk(code, sigma, g) - true_risk(cx.code_to_hypothesis(code, g), P)) <= 1e-12


def test_empirical_risk_decomposes_over_blocks():
    g, sigma, eps, s = est.trial_inputs(256, 4, "oi", 3)
    code, _ = est.erm_blockwise(s, g)
    h = cx.code_to_hypothesis(code, g)
    per_block = [
        np.count_nonzero((g.point_block[s.indices] == t) & (h.labels[s.indices] != s.labels))
        for t in range(g.k)
    ]
    assert abs(sum(per_block) / len(s) - empirical_risk(h, s)) <= 1e-12


@pytest.mark.parametrize("variant,n,k", [("oi", 32, 2), ("od", 64, 2), ("oi", 1024, 4)])
def test_run_trial_properties(variant, n, k):
    for seed in range(50):
        out = est.run_trial("uc", n, k, variant, seed)
        assert out.excess >= 0
        assert 0 <= out.uc_sup <= 1
        assert out.excess == out.erm_true_risk - out.reachable_min_risk
        assert est.run_trial("uc", n, k, variant, seed) == out
        flat = est.run_trial("ag", n, k, variant, seed, eps=0.0)
        assert flat.excess == 0.0 and flat.uc_sup is None


def test_run_trial_erm_risk_is_exact():
    for seed in range(20):
        g, sigma, eps, s = est.trial_inputs(64, 2, "oi", seed)
        out = est.run_trial("ag", 64, 2, "oi", seed)
        P = cx.build_distribution(sigma, g)
        assert abs(out.erm_true_risk - true_risk(cx.code_to_hypothesis(out.erm_code, g), P)) <= 1e-12


def test_monte_carlo_identical_trials():
    est_ = est.monte_carlo("ag", 32, 2, "oi", 2, 7)
    assert est_.trials == 2 and est_.values.size == 2
    # the same trial seed repeated gives the single-trial value with zero spread
    single = est.run_trial("ag", 32, 2, "oi", 11).excess
    vals = np.array([est.run_trial("ag", 32, 2, "oi", 11).excess for _ in range(5)])
    assert vals.mean() == single and vals.std(ddof=1) == 0


def test_monte_carlo_prefix_reproduction():
    a = est.monte_carlo("uc", 64, 2, "od", 10, 123)
    b = est.monte_carlo("uc", 64, 2, "od", 20, 123)
    assert np.array_equal(a.values, b.values[:10])
    assert est.monte_carlo("uc", 64, 2, "od", 10, 123).mean == a.mean


def test_monte_carlo_parallel_matches_serial():
    a = est.monte_carlo("ag", 128, 2, "oi", 16, 9)
    b = est.monte_carlo("ag", 128, 2, "oi", 16, 9, workers=2)
    assert np.array_equal(a.values, b.values) and a.mean == b.mean and a.stderr == b.stderr


def test_monte_carlo_rejects_few_trials():
    with pytest.raises(ValueError):
        est.monte_carlo("ag", 32, 2, "oi", 1, 0)


def test_monte_carlo_small_point_floor():
    r = est.monte_carlo("ag", 32, 2, "oi", 10_000, 2026)
    assert r.epsilon == 0.5 and r.m == 16
    assert 0 < r.mean < r.epsilon
    assert r.mean >= est.FLOOR_CONSTANT * r.epsilon
    assert r.stderr == pytest.approx(np.std(r.values, ddof=1) / 100)


def test_fit_exact_log_model():
    pts = [(n, 4, math.sqrt(4 * math.log2(n / 4) / n)) for n in (64, 256, 1024, 4096)]
    fit = est.fit_rate_law(pts, "oi")
    assert fit.slope == pytest.approx(1.0, abs=1e-9)
    assert fit.intercept == pytest.approx(0.0, abs=1e-9)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_fit_log_free_model():
    pts = [(n, 2, math.sqrt(2 / n)) for n in (64, 256, 1024)]
    fit = est.fit_rate_law(pts, "oi")
    assert fit.slope == pytest.approx(0.0, abs=1e-9)
    assert fit.intercept == pytest.approx(1.0, abs=1e-9)
    assert fit.r_squared == 1.0


def test_fit_affine_model_order_dependent():
    pts = [(n, 2, math.sqrt(2 * (2 * math.log2(n) + 3) / n)) for n in (128, 512, 2048, 8192)]
    fit = est.fit_rate_law(pts, "od")
    assert fit.slope == pytest.approx(2.0, abs=1e-9)
    assert fit.intercept == pytest.approx(3.0, abs=1e-9)


def test_fit_errors():
    with pytest.raises(ValueError):
        est.fit_rate_law([(64, 2, 0.1), (128, 2, 0.1)])
    with pytest.raises(ValueError):
        est.fit_rate_law([(64, 2, 0.1), (64, 2, 0.2), (64, 2, 0.3)])
    with pytest.raises(ValueError):
        est.fit_rate_law([(64, 2, 0.1), (128, 2, 0.0), (256, 2, 0.3)])


def test_upper_bound_examples():
    expected = math.sqrt(2 * (2 * (1 + math.log(16)) + math.log(2)) / 32)
    assert est.upper_bound_uc(32, 2, "oi") == pytest.approx(expected, rel=1e-12)
    assert est.upper_bound_uc(32, 2, "oi") == pytest.approx(0.7176, abs=1e-4)
    with pytest.raises(ValueError):
        est.upper_bound_uc(2, 2, "oi")


@given(st.integers(1, 50), st.integers(2, 10**6))
def test_upper_bound_monotone_in_n(k, n):
    if n <= k:
        return
    for variant in ("oi", "od"):
        assert est.upper_bound_uc(n + 1, k, variant) < est.upper_bound_uc(n, k, variant)


@given(st.integers(3, 50), st.integers(4, 10**6))
def test_order_dependent_bound_dominates_for_k_at_least_three(k, n):
    # k ln n >= k ln(e n / k) exactly when k >= e
    if n <= k:
        return
    assert est.upper_bound_uc(n, k, "od") >= est.upper_bound_uc(n, k, "oi")
