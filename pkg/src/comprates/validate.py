"""Self-validation suites: oracle equivalence, algebraic identities, distributional checks.

Each suite returns a :class:`SuiteResult`; failures carry the seed and
parameters needed to reproduce the failing case.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import construction as cx
from . import estimators as est
from .core import (
    FiniteLabelDistribution,
    Hypothesis,
    conditional_risk,
    empirical_risk,
    sample_dataset,
    true_risk,
)
from .rng import make_generator, mix

TOL = 1e-12
TINY_CONFIGS = [(4, 1), (6, 2), (8, 2)]
IDENTITY_CONFIGS = [(32, 2, "oi"), (16, 2, "od")]


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def check(self, ok: bool, detail: str) -> None:
        self.cases += 1
        if not ok:
            self.failures.append(detail)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.cases - len(self.failures)}/{self.cases} cases"


def risk_identities(seed: int, draws: int = 500) -> SuiteResult:
    """Label-flip symmetry and conditional decomposition on random distributions."""
    res = SuiteResult("risk-identities")
    rng = make_generator(seed)
    for d in range(draws):
        cells = int(rng.integers(1, 5))
        size = int(rng.integers(1, 9))
        N = cells * size
        P = FiniteLabelDistribution(rng.random(N))
        h = Hypothesis(rng.integers(0, 2, N))
        r = true_risk(h, P)
        res.check(abs(true_risk(h.complement(), P) - (1.0 - r)) <= TOL,
                  f"label flip, seed={seed} draw={d}")
        parts = [conditional_risk(h, P, range(c * size, (c + 1) * size)) for c in range(cells)]
        res.check(abs(np.mean(parts) - r) <= TOL, f"conditional decomposition, seed={seed} draw={d}")
    return res


def empirical_consistency(seed: int, samples: int = 10_000, n: int = 100) -> SuiteResult:
    """Mean empirical risk over many samples lies within 5 standard errors of the true risk."""
    res = SuiteResult("empirical-consistency")
    rng = make_generator(seed)
    N = 12
    P = FiniteLabelDistribution(rng.random(N))
    h = Hypothesis(rng.integers(0, 2, N))
    values = np.array([empirical_risk(h, sample_dataset(P, n, mix(seed, s))) for s in range(samples)])
    se = values.std(ddof=1) / np.sqrt(samples)
    gap = abs(values.mean() - true_risk(h, P))
    res.check(gap <= 5 * se, f"seed={seed}: |mean - R| = {gap:.3g} > 5 * {se:.3g}")
    return res


def _small_geometries():
    for n, k in [(4, 1), (8, 2), (12, 3), (32, 2)]:
        yield cx.make_geometry(n, k, "oi")
    for n, k in [(8, 2), (16, 2), (16, 4), (40, 4)]:
        yield cx.make_geometry(n, k, "od")


def _all_codes(g: cx.BlockGeometry):
    per_block = [
        list(g.block_range(t)) if g.variant is cx.Variant.ORDER_INDEPENDENT else list(range(g.m))
        for t in range(1, g.k + 1)
    ]
    return itertools.product(*per_block)


def coherence(seed: int) -> SuiteResult:
    """code_to_hypothesis agrees pointwise with the block classifiers (exhaustive)."""
    res = SuiteResult("reconstruction-coherence")
    for g in _small_geometries():
        if g.m ** g.k > 5000:
            continue
        for code in _all_codes(g):
            h = cx.code_to_hypothesis(code, g)
            ok = all(
                h(j) == cx.eval_block_hypothesis(g.block_of(j), code[g.block_of(j) - 1], j, g)
                for j in range(g.support_size)
            )
            res.check(ok, f"{g.variant.value} n={g.n} k={g.k} code={code}")
    return res


def multiset_invariance(seed: int, draws: int = 300) -> SuiteResult:
    res = SuiteResult("multiset-invariance")
    rng = make_generator(seed)
    for n, k in [(8, 2), (32, 4), (64, 3)]:
        g = cx.make_geometry(n, k, "oi")
        for d in range(draws):
            size = int(rng.integers(0, k + 1))
            members = rng.integers(0, g.support_size, size).tolist()
            ref = cx.reconstruct_multiset(members, g)
            perm = rng.permutation(members).tolist()
            labelled = [(i, int(rng.integers(0, 2))) for i in perm]
            ok = cx.reconstruct_multiset(perm, g) == ref == cx.reconstruct_multiset(labelled, g)
            if members and size < k:
                dup = perm + [perm[0]] * (k - size)
                ok = ok and cx.reconstruct_multiset(dup, g) == ref
            res.check(ok, f"n={n} k={k} members={members}")
    return res


def _weighted_excess(t, i, sigma, g, eps):
    best = cx.optimal_code(sigma, g)[t - 1]
    base = g.code_base(t)
    total = 0.0
    for r in range(g.bit_width):
        weight = len(g.bit_class(t, r)) / g.block_size
        total += weight * (cx.bit(i - base, r) != cx.bit(best - base, r))
    return eps * total


def decomposition_identities(seed: int, draws: int = 1000) -> SuiteResult:
    """Risk decomposition over blocks and the weighted bit-excess identity."""
    res = SuiteResult("decomposition-identities")
    rng = make_generator(seed)
    for n, k, variant in IDENTITY_CONFIGS:
        g = cx.make_geometry(n, k, variant)
        eps = cx.epsilon(g)
        blocks = [list(g.block_range(t)) for t in range(1, k + 1)]
        for d in range(draws):
            sigma = cx.sample_sign_matrix(g, mix(seed, d))
            P = cx.build_distribution(sigma, g)
            codes = list(_all_codes_random(g, rng))
            h = cx.code_to_hypothesis(codes, g)
            r = true_risk(h, P)
            parts = [conditional_risk(h, P, b) for b in blocks]
            res.check(abs(r - sum(parts) / k) <= TOL, f"{variant} decomposition draw={d}")
            res.check(abs(r - est.code_true_risk(codes, sigma, g)) <= TOL,
                      f"{variant} per-block risk draw={d}")
            star = cx.code_to_hypothesis(cx.optimal_code(sigma, g), g)
            t = int(rng.integers(1, k + 1))
            lhs = conditional_risk(h, P, blocks[t - 1]) - conditional_risk(star, P, blocks[t - 1])
            rhs = _weighted_excess(t, codes[t - 1], sigma, g, eps)
            res.check(abs(lhs - rhs) <= TOL, f"{variant} weighted excess draw={d} t={t}")
        if g.divisible:
            res.check(np.allclose(g.class_weights, 1.0 / g.bit_width, rtol=0, atol=TOL),
                      f"{variant} weights differ from 1/log2(m)")
    return res


def _all_codes_random(g, rng):
    for t in range(1, g.k + 1):
        if g.variant is cx.Variant.ORDER_INDEPENDENT:
            yield g.block_start(t) + int(rng.integers(0, g.block_size))
        else:
            yield int(rng.integers(0, g.m))


def delta_draws(g: cx.BlockGeometry, sigma, t: int, draws: int, seed: int) -> np.ndarray:
    """Hamming distances to the optimal block-``t`` code of uniformly drawn instances.

    Order-independent: the instance is uniform on block ``t``; order-dependent:
    uniform on the whole support (any index is a valid code there).
    """
    if g.variant is cx.Variant.ORDER_INDEPENDENT:
        pool = np.arange(g.block_start(t), g.block_start(t) + g.block_size)
    else:
        pool = np.arange(g.m)
    table = np.array([cx.hamming_delta(t, int(i), sigma, g) for i in pool])
    picks = make_generator(seed).integers(0, pool.size, draws)
    return table[picks]


def binomial_law(seed: int, draws: int = 100_000, alpha: float = 1e-3) -> SuiteResult:
    res = SuiteResult("binomial-law")
    for n, k, variant in IDENTITY_CONFIGS + [(1024, 4, "oi"), (1024, 4, "od")]:
        g = cx.make_geometry(n, k, variant)
        sigma = cx.sample_sign_matrix(g, mix(seed, n))
        for t in range(1, k + 1):
            deltas = delta_draws(g, sigma, t, draws, mix(seed, 1000 * n + t))
            observed = np.bincount(deltas, minlength=g.bit_width + 1)
            expected = stats.binom.pmf(np.arange(g.bit_width + 1), g.bit_width, 0.5) * draws
            p = stats.chisquare(observed, expected).pvalue
            res.check(p > alpha, f"{variant} n={n} k={k} t={t}: chi-square p={p:.3g}")
    return res


def optimality(seed: int, draws: int = 20) -> SuiteResult:
    """No code has strictly smaller true risk than optimal_code (brute force)."""
    res = SuiteResult("optimal-code")
    for g in _small_geometries():
        if g.m ** g.k > 5000:
            continue
        hyps = {code: cx.code_to_hypothesis(code, g) for code in _all_codes(g)}
        for d in range(draws):
            sigma = cx.sample_sign_matrix(g, mix(seed, d))
            P = cx.build_distribution(sigma, g)
            best = true_risk(hyps[cx.optimal_code(sigma, g)], P)
            floor = min(true_risk(h, P) for h in hyps.values())
            eps = cx.epsilon(g)
            res.check(best <= floor + TOL and abs(best - (1 - eps) / 2) <= TOL,
                      f"{g.variant.value} n={g.n} k={g.k} draw={d}")
    return res


def _tiny_instances(seed: int, trials: int):
    for n, k in TINY_CONFIGS:
        for variant in ("oi", "od"):
            for s in range(trials):
                trial_seed = mix(seed, s)
                yield (n, k, variant, trial_seed), est.trial_inputs(n, k, variant, trial_seed)


def erm_equivalence(seed: int, trials: int = 200) -> SuiteResult:
    res = SuiteResult("erm-oracle-equivalence")
    for (n, k, variant, s), (g, sigma, eps, sample) in _tiny_instances(seed, trials):
        fast, _ = est.erm_blockwise(sample, g)
        slow = est.erm_naive(sample, g)
        a = empirical_risk(cx.code_to_hypothesis(fast, g), sample)
        b = empirical_risk(cx.code_to_hypothesis(slow, g), sample)
        res.check(a == b, f"{variant} n={n} k={k} seed={s}: blockwise {a} vs naive {b}")
    return res


def min_sup_equivalence(seed: int, trials: int = 200) -> SuiteResult:
    res = SuiteResult("min-sup-oracle-equivalence")
    for (n, k, variant, s), (g, sigma, eps, sample) in _tiny_instances(seed, trials):
        a = est.reachable_min_true_risk(sample, sigma, g)
        b = est.brute_force_min_true_risk(sample, sigma, g)
        res.check(abs(a - b) <= TOL, f"{variant} n={n} k={k} seed={s}: min {a} vs {b}")
        a = est.uc_sup_exact(sample, sigma, g)
        b = est.brute_force_uc_sup(sample, sigma, g)
        res.check(abs(a - b) <= TOL, f"{variant} n={n} k={k} seed={s}: sup {a} vs {b}")
    return res


def realization(seed: int, trials: int = 200) -> SuiteResult:
    """The compression set returned by ERM reconstructs to the ERM code from sampled points."""
    res = SuiteResult("reachability-realization")
    configs = [(n, k, v) for n, k in TINY_CONFIGS + [(64, 4), (256, 4)] for v in ("oi", "od")]
    for n, k, variant in configs:
        try:
            cx.make_geometry(n, k, variant)
        except cx.ConfigurationError:
            continue
        for t in range(trials):
            s = mix(seed, t)
            g, _, _, sample = est.trial_inputs(n, k, variant, s)
            code, S = est.erm_blockwise(sample, g)
            sampled = set(sample.indices.tolist())
            ok = cx.reconstruct(S, g) == code and set(S) <= sampled and len(S) <= k
            res.check(ok, f"{variant} n={n} k={k} seed={s}: code={code} set={S}")
    return res


def nonnegativity_and_degeneracy(seed: int, trials: int = 200) -> SuiteResult:
    res = SuiteResult("excess-nonnegativity")
    for n, k, variant in [(32, 2, "oi"), (256, 4, "oi"), (16, 2, "od"), (256, 2, "od")]:
        for t in range(trials):
            s = mix(seed, t)
            out = est.run_trial("uc", n, k, variant, s)
            res.check(out.excess >= 0.0, f"{variant} n={n} k={k} seed={s}: excess {out.excess}")
            flat = est.run_trial("ag", n, k, variant, s, eps=0.0)
            res.check(flat.excess == 0.0, f"{variant} n={n} k={k} seed={s}: eps=0 excess {flat.excess}")
    return res


def determinism(seed: int) -> SuiteResult:
    res = SuiteResult("determinism")
    for measure, variant, n, k in [("ag", "oi", 64, 2), ("uc", "od", 64, 2)]:
        a = est.monte_carlo(measure, n, k, variant, 20, seed)
        b = est.monte_carlo(measure, n, k, variant, 20, seed)
        c = est.monte_carlo(measure, n, k, variant, 40, seed)
        ok = (a.mean == b.mean and a.stderr == b.stderr
              and np.array_equal(a.values, c.values[:20]))
        res.check(ok, f"{measure} {variant} n={n} k={k} seed={seed}")
    return res


SUITES = [
    risk_identities,
    empirical_consistency,
    coherence,
    multiset_invariance,
    decomposition_identities,
    binomial_law,
    optimality,
    erm_equivalence,
    min_sup_equivalence,
    realization,
    nonnegativity_and_degeneracy,
    determinism,
]


def run_all(seed: int) -> list:
    return [suite(seed) for suite in SUITES]
