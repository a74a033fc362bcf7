"""ERM compression, exact excess-risk and uniform-deviation computation, Monte Carlo rates.

Every classifier the constructions can produce is determined by one code per
block, and both its empirical and its true risk split into per-block terms.
The exact routines here work on those per-block terms:

* order-independent: the reachable class is a product over blocks, so minima
  and maxima of block sums are sums of per-block minima and maxima;
* order-dependent: compression sequences of length ``c < k`` are zero padded,
  so the reachable class is the union over ``c = 0..k`` of "sampled codes for
  blocks ``1..c``, code 0 for blocks ``c+1..k``".

The brute-force oracles enumerate compression sets literally and evaluate
full label vectors; they share nothing with the fast path beyond the
reconstruction functions themselves.
"""
from __future__ import annotations

import enum
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import construction as cx
from .construction import BlockGeometry, ConfigurationError, Variant
from .core import Sample, empirical_risk, sample_dataset, true_risk
from .rng import check_seed, mix

FLOOR_CONSTANT = 1.0 / (16.0 * math.e**4)
NAIVE_LIMIT = 10**7


class Measure(str, enum.Enum):
    AGNOSTIC_EXCESS = "ag"
    UNIFORM_CONVERGENCE = "uc"

    @classmethod
    def parse(cls, value) -> "Measure":
        if isinstance(value, Measure):
            return value
        aliases = {
            "ag": cls.AGNOSTIC_EXCESS,
            "agnostic-excess": cls.AGNOSTIC_EXCESS,
            "uc": cls.UNIFORM_CONVERGENCE,
            "uniform-convergence": cls.UNIFORM_CONVERGENCE,
        }
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown measure {value!r}; expected 'ag' or 'uc'") from None


class ResourceLimitError(RuntimeError):
    pass


@dataclass(frozen=True)
class CandidateSets:
    """Codes reachable from a sample, per block.

    For the order-dependent variant ``zero_suffix`` is set: besides the
    product of ``per_block`` sets, any prefix of blocks may take sampled codes
    while the remaining blocks take code 0.
    """

    per_block: tuple
    zero_suffix: bool = False


@dataclass(frozen=True)
class TrialOutcome:
    erm_code: tuple
    erm_true_risk: float
    reachable_min_risk: float
    excess: float
    uc_sup: float | None = None


@dataclass(frozen=True)
class RateEstimate:
    measure: Measure
    variant: Variant
    n: int
    k: int
    m: int
    epsilon: float
    trials: int
    mean: float
    stderr: float
    seed: int
    values: np.ndarray = field(repr=False, compare=False, default=None)


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    points: tuple


def _check_sample(sample: Sample, geometry: BlockGeometry) -> None:
    if len(sample) == 0:
        raise ValueError("sample is empty")
    if sample.indices.max() >= geometry.support_size:
        raise ValueError("sample refers to instances outside the construction support")


def candidate_sets(sample: Sample, geometry: BlockGeometry) -> CandidateSets:
    _check_sample(sample, geometry)
    idx = np.unique(sample.indices)
    if geometry.variant is Variant.ORDER_DEPENDENT:
        codes = tuple(int(i) for i in idx)
        return CandidateSets(tuple(codes for _ in range(geometry.k)), zero_suffix=True)
    per_block = []
    for t in range(1, geometry.k + 1):
        lo = geometry.block_start(t)
        inside = idx[(idx >= lo) & (idx < lo + geometry.block_size)]
        per_block.append(tuple(sorted({lo, *map(int, inside)})))
    return CandidateSets(tuple(per_block))


class _BlockTables:
    """Per-block candidate codes with their mistake counts and risks.

    For block ``t`` (0-based row), ``codes[t]`` holds the candidate codes in
    increasing order, ``errors[t]`` the number of block-``t`` sample points
    each one mislabels, and ``risk[t]`` its conditional risk on block ``t``.
    ``zero_errors`` / ``zero_risk`` are the same quantities for code 0 (used
    only by the order-dependent padding rule).
    """

    def __init__(self, sample: Sample, geometry: BlockGeometry, sigma=None, eps=None):
        _check_sample(sample, geometry)
        g = geometry
        self.geometry = g
        self.n = len(sample)
        w = g.bit_width
        shifts = np.arange(w, dtype=np.int64)

        # ones/zeros[t, r]: sample labels seen in bit class C_{t,r}
        cell = g.point_block[sample.indices] * w + g.point_bit[sample.indices]
        ones = np.bincount(cell, weights=sample.labels, minlength=g.k * w)
        total = np.bincount(cell, minlength=g.k * w)
        ones = ones.astype(np.int64).reshape(g.k, w)
        zeros = total.reshape(g.k, w) - ones

        if sigma is not None:
            sigma = cx.check_signs(sigma, g)
            if eps is None:
                eps = cx.epsilon(g)
            eta = 0.5 + 0.5 * eps * sigma.astype(np.float64)
            wts = g.class_weights
            base_risk = eta @ wts
            risk_slope = (1.0 - 2.0 * eta) * wts
        uniq = np.unique(sample.indices)

        self.codes, self.errors, self.risk = [], [], []
        for t in range(g.k):
            if g.variant is Variant.ORDER_INDEPENDENT:
                lo = t * g.block_size
                inside = uniq[(uniq >= lo) & (uniq < lo + g.block_size)]
                offsets = np.union1d(inside - lo, [0])
                codes = offsets + lo
            else:
                offsets = codes = uniq
            bits = (offsets[:, None] >> shifts) & 1
            self.codes.append(codes)
            self.errors.append(ones[t].sum() + bits @ (zeros[t] - ones[t]))
            if sigma is not None:
                self.risk.append(base_risk[t] + bits @ risk_slope[t])
        self.zero_errors = ones.sum(axis=1)
        if sigma is not None:
            self.zero_risk = base_risk + 0.0

    def cuts(self) -> range:
        """Prefix lengths whose remaining blocks are zero padded."""
        k = self.geometry.k
        if self.geometry.variant is Variant.ORDER_DEPENDENT:
            return range(k, -1, -1)
        return range(k, k + 1)

    def assemble(self, choose, zero_value, cut: int):
        """Per-block values for one cut: ``choose(t)`` on the prefix, ``zero_value(t)`` after."""
        return [choose(t) if t < cut else zero_value(t) for t in range(self.geometry.k)]


def _block_mean(values) -> float:
    # Single summation routine so risks assembled from the same per-block
    # floats compare exactly (rounding is monotone).
    total = 0.0
    for v in values:
        total += float(v)
    return total / len(values)


def _erm_from_tables(tab: _BlockTables) -> tuple:
    g = tab.geometry
    best_pos = [int(np.argmin(e)) for e in tab.errors]  # argmin keeps the smallest code on ties
    options = []
    for cut in tab.cuts():
        code = tuple(
            int(tab.codes[t][best_pos[t]]) if t < cut else 0 for t in range(g.k)
        )
        mistakes = sum(
            int(tab.errors[t][best_pos[t]]) if t < cut else int(tab.zero_errors[t])
            for t in range(g.k)
        )
        options.append((mistakes, code, cut))
    mistakes, code, cut = min(options)
    return code, cut, best_pos


def _realizing_set(code: tuple, geometry: BlockGeometry) -> tuple:
    if geometry.variant is Variant.ORDER_INDEPENDENT:
        return tuple(sorted(i for t, i in enumerate(code, start=1) if i != geometry.block_start(t)))
    seq = list(code)
    while seq and seq[-1] == 0:
        seq.pop()
    return tuple(seq)


def erm_blockwise(sample: Sample, geometry: BlockGeometry):
    """Empirical risk minimizer over the reachable class.

    Returns ``(code, compression_set)`` where reconstructing
    ``compression_set`` yields ``code`` and every member is a sampled index.
    """
    tab = _BlockTables(sample, geometry)
    code, _, _ = _erm_from_tables(tab)
    return code, _realizing_set(code, geometry)


def _erm_risk_parts(tab: _BlockTables, code_cut_pos):
    code, cut, best_pos = code_cut_pos
    return tab.assemble(lambda t: tab.risk[t][best_pos[t]], lambda t: tab.zero_risk[t], cut)


def _reachable_min_from_tables(tab: _BlockTables) -> float:
    mins = [float(r.min()) for r in tab.risk]
    return min(
        _block_mean(tab.assemble(lambda t: mins[t], lambda t: tab.zero_risk[t], cut))
        for cut in tab.cuts()
    )


def _uc_sup_from_tables(tab: _BlockTables) -> float:
    g = tab.geometry
    dev = [tab.errors[t] / tab.n - tab.risk[t] / g.k for t in range(g.k)]
    dev_zero = [tab.zero_errors[t] / tab.n - tab.zero_risk[t] / g.k for t in range(g.k)]
    hi = [float(d.max()) for d in dev]
    lo = [float(d.min()) for d in dev]
    best = 0.0
    for cut in tab.cuts():
        up = sum(tab.assemble(lambda t: hi[t], lambda t: dev_zero[t], cut))
        down = sum(tab.assemble(lambda t: lo[t], lambda t: dev_zero[t], cut))
        best = max(best, up, -down)
    return best


def reachable_min_true_risk(sample: Sample, sigma, geometry: BlockGeometry, eps=None) -> float:
    """Smallest true risk over every classifier reachable from ``sample``."""
    return _reachable_min_from_tables(_BlockTables(sample, geometry, sigma, eps))


def uc_sup_exact(sample: Sample, sigma, geometry: BlockGeometry, eps=None) -> float:
    """sup over the reachable class of |empirical risk - true risk|."""
    return _uc_sup_from_tables(_BlockTables(sample, geometry, sigma, eps))


def code_true_risk(code, sigma, geometry: BlockGeometry, eps=None) -> float:
    """True risk of a code through its per-block decomposition."""
    code = cx.check_code(code, geometry)
    sigma = cx.check_signs(sigma, geometry)
    if eps is None:
        eps = cx.epsilon(geometry)
    eta = 0.5 + 0.5 * eps * sigma.astype(np.float64)
    wts = geometry.class_weights
    shifts = np.arange(geometry.bit_width)
    parts = []
    for t, i in enumerate(code, start=1):
        bits = ((i - geometry.code_base(t)) >> shifts) & 1
        parts.append(eta[t - 1] @ wts + bits @ ((1.0 - 2.0 * eta[t - 1]) * wts))
    return _block_mean(parts)


# ---------------------------------------------------------------- oracles


def _compression_arguments(sample: Sample, geometry: BlockGeometry):
    n, k = len(sample), geometry.k
    if n**k > NAIVE_LIMIT:
        raise ResourceLimitError(f"enumeration size n^k = {n}^{k} exceeds {NAIVE_LIMIT}")
    idx = sample.indices.tolist()
    if geometry.variant is Variant.ORDER_INDEPENDENT:
        for size in range(k + 1):
            for positions in itertools.combinations(range(n), size):
                yield [idx[p] for p in positions]
    else:
        for size in range(k + 1):
            for positions in itertools.product(range(n), repeat=size):
                yield [idx[p] for p in positions]


def reachable_codes(sample: Sample, geometry: BlockGeometry) -> list:
    """Every code ``rho`` produces from a compression argument drawn from ``sample``."""
    _check_sample(sample, geometry)
    return sorted({cx.reconstruct(S, geometry) for S in _compression_arguments(sample, geometry)})


def erm_naive(sample: Sample, geometry: BlockGeometry) -> tuple:
    """Exhaustive ERM over all compression arguments (ties: smallest code)."""
    best = None
    for code in reachable_codes(sample, geometry):
        risk = empirical_risk(cx.code_to_hypothesis(code, geometry), sample)
        if best is None or risk < best[0]:
            best = (risk, code)
    return best[1]


def brute_force_min_true_risk(sample: Sample, sigma, geometry: BlockGeometry, eps=None) -> float:
    P = cx.build_distribution(sigma, geometry, eps)
    return min(
        true_risk(cx.code_to_hypothesis(c, geometry), P) for c in reachable_codes(sample, geometry)
    )


def brute_force_uc_sup(sample: Sample, sigma, geometry: BlockGeometry, eps=None) -> float:
    P = cx.build_distribution(sigma, geometry, eps)
    sup = 0.0
    for code in reachable_codes(sample, geometry):
        h = cx.code_to_hypothesis(code, geometry)
        sup = max(sup, abs(empirical_risk(h, sample) - true_risk(h, P)))
    return sup


# ---------------------------------------------------------------- Monte Carlo


def trial_inputs(n: int, k: int, variant, seed: int, eps=None):
    """Geometry, signs, bias and sample used by trial ``seed``."""
    geometry = cx.make_geometry(n, k, variant)
    bias = cx.epsilon(geometry) if eps is None else eps
    sigma = cx.sample_sign_matrix(geometry, mix(seed, 0))
    P = cx.build_distribution(sigma, geometry, bias)
    sample = sample_dataset(P, n, mix(seed, 1))
    return geometry, sigma, bias, sample


def run_trial(measure, n: int, k: int, variant, seed: int, eps=None) -> TrialOutcome:
    """One draw of the excess-risk (and optionally uniform-deviation) integrand.

    ``eps`` overrides the bias of the hard distribution; ``eps=0.0`` is the
    degenerate case where every classifier has risk 1/2.
    """
    measure = Measure.parse(measure)
    seed = check_seed(seed)
    geometry, sigma, bias, sample = trial_inputs(n, k, variant, seed, eps)
    tab = _BlockTables(sample, geometry, sigma, bias)
    erm = _erm_from_tables(tab)
    erm_risk = _block_mean(_erm_risk_parts(tab, erm))
    best = _reachable_min_from_tables(tab)
    uc = _uc_sup_from_tables(tab) if measure is Measure.UNIFORM_CONVERGENCE else None
    return TrialOutcome(erm[0], erm_risk, best, erm_risk - best, uc)


def _trial_value(args) -> float:
    measure, n, k, variant, seed, eps = args
    out = run_trial(measure, n, k, variant, seed, eps)
    return out.uc_sup if measure is Measure.UNIFORM_CONVERGENCE else out.excess


def monte_carlo(measure, n: int, k: int, variant, trials: int, master_seed: int,
                eps=None, workers: int = 1) -> RateEstimate:
    """Estimate Rate_ag or Rate_uc at one (n, k) point of the hard construction.

    Trial ``i`` uses seed ``mix(master_seed, i)``; values are stored by trial
    index and reduced in index order, so the result does not depend on
    ``workers``.
    """
    measure = Measure.parse(measure)
    variant = Variant.parse(variant)
    master_seed = check_seed(master_seed)
    if trials < 2:
        raise ValueError("monte_carlo needs at least 2 trials")
    geometry = cx.make_geometry(n, k, variant)
    bias = cx.epsilon(geometry) if eps is None else eps

    jobs = [(measure, n, k, variant, mix(master_seed, i), eps) for i in range(trials)]
    values = np.empty(trials, dtype=np.float64)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, v in enumerate(pool.map(_trial_value, jobs, chunksize=max(1, trials // (4 * workers)))):
                values[i] = v
    else:
        for i, job in enumerate(jobs):
            values[i] = _trial_value(job)
    values.setflags(write=False)
    return RateEstimate(
        measure=measure,
        variant=variant,
        n=n,
        k=k,
        m=geometry.m,
        epsilon=bias,
        trials=trials,
        mean=float(np.mean(values)),
        stderr=float(np.std(values, ddof=1) / math.sqrt(trials)),
        seed=master_seed,
        values=values,
    )


# ---------------------------------------------------------------- rate laws


def rate_abscissa(n: int, k: int, variant) -> float:
    if Variant.parse(variant) is Variant.ORDER_INDEPENDENT:
        return math.log2(n / k)
    return math.log2(n)


def fit_rate_law(points, variant=Variant.ORDER_INDEPENDENT) -> FitResult:
    """Least-squares line of rate^2 * n / k against log2(n/k) (or log2 n).

    Under a rate of sqrt(k (a log + b) / n) the fit recovers slope ``a`` and
    intercept ``b``; a log-free rate gives slope 0.
    """
    points = [(int(n), int(k), float(r)) for n, k, r in points]
    if len(points) < 3:
        raise ValueError(f"need at least 3 points to fit a rate law, got {len(points)}")
    if any(r <= 0 for _, _, r in points):
        raise ValueError("all rates must be positive")
    x = np.array([rate_abscissa(n, k, variant) for n, k, _ in points])
    y = np.array([r * r * n / k for n, k, r in points])
    if np.ptp(x) == 0:
        raise ValueError("all abscissas are equal; the slope is not identifiable")
    xc = x - x.mean()
    slope = float(xc @ (y - y.mean()) / (xc @ xc))
    intercept = float(y.mean() - slope * x.mean())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float(((y - intercept - slope * x) ** 2).sum())
    scale = max(float(np.abs(y).max()), 1.0)
    if ss_tot <= len(y) * (1e-12 * scale) ** 2:
        r2 = 1.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return FitResult(slope, intercept, r2, tuple(zip(x.tolist(), y.tolist())))


def upper_bound_uc(n: int, k: int, variant) -> float:
    """Finite-class bound on the expected uniform deviation over the reachable class.

    Order-independent: at most (e n / k)^k reachable classifiers; order-dependent: at most n^k.
    """
    n, k = int(n), int(k)
    if k < 1 or n <= k:
        raise ValueError(f"upper bound needs n > k >= 1 (n={n}, k={k})")
    if Variant.parse(variant) is Variant.ORDER_INDEPENDENT:
        log_card = k * math.log(math.e * n / k)
    else:
        log_card = k * math.log(n)
    return math.sqrt(2.0 * (log_card + math.log(2.0)) / n)


def lower_envelope(geometry: BlockGeometry) -> float:
    return FLOOR_CONSTANT * cx.epsilon(geometry)


__all__ = [
    "CandidateSets",
    "ConfigurationError",
    "FLOOR_CONSTANT",
    "FitResult",
    "Measure",
    "RateEstimate",
    "ResourceLimitError",
    "TrialOutcome",
    "brute_force_min_true_risk",
    "brute_force_uc_sup",
    "candidate_sets",
    "code_true_risk",
    "erm_blockwise",
    "erm_naive",
    "fit_rate_law",
    "lower_envelope",
    "monte_carlo",
    "rate_abscissa",
    "reachable_codes",
    "reachable_min_true_risk",
    "run_trial",
    "uc_sup_exact",
    "upper_bound_uc",
]
