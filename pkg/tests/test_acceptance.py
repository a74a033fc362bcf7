"""Exit criteria: oracle suites plus the scaling-law reproduction.

Each test records one PASS/FAIL line, printed in the terminal summary.
"""
import time

import numpy as np
import pytest

from comprates import construction as cx
from comprates import estimators as est
from comprates import validate as val
from comprates.cli import main

SEED = 20261019
TRIALS = 2000
OI_K, OI_NS = 4, [2**8, 2**10, 2**12, 2**14]
OD_K, OD_NS = 2, [2**e for e in range(8, 15)]


@pytest.fixture(scope="module")
def sweeps():
    out = {}
    for variant, k, ns in (("oi", OI_K, OI_NS), ("od", OD_K, OD_NS)):
        for n in ns:
            for measure in ("ag", "uc"):
                out[variant, n, measure] = est.monte_carlo(measure, n, k, variant, TRIALS, SEED)
    return out


def test_criterion_1_oracle_equivalence(report):
    start = time.perf_counter()
    erm = val.erm_equivalence(SEED, trials=200)
    min_sup = val.min_sup_equivalence(SEED, trials=200)
    elapsed = time.perf_counter() - start
    ok = erm.passed and min_sup.passed and elapsed < 60
    report("1 oracle equivalence", ok,
           f"ERM {erm.cases - len(erm.failures)}/{erm.cases}, min/sup "
           f"{min_sup.cases - len(min_sup.failures)}/{min_sup.cases}, {elapsed:.1f}s (< 60s)")
    assert erm.cases == 1200 and min_sup.cases == 2400
    assert ok, erm.failures[:5] + min_sup.failures[:5]


def test_criterion_2_algebraic_identities(report):
    res = val.decomposition_identities(SEED, draws=1000)
    weights_ok = all(
        np.allclose(g.class_weights, 1 / g.bit_width, rtol=0, atol=1e-12)
        for g in (cx.make_geometry(32, 2, "oi"), cx.make_geometry(16, 2, "od"))
    )
    ok = res.passed and weights_ok
    report("2 algebraic identities", ok,
           f"{res.cases - len(res.failures)}/{res.cases} identity checks at 1e-12; "
           f"divisible weights = 1/log2(m): {weights_ok}")
    assert ok, res.failures[:5]


def test_criterion_3_binomial_law(report):
    res = val.binomial_law(SEED, draws=100_000, alpha=1e-3)
    report("3 binomial law", res.passed, f"{res.cases - len(res.failures)}/{res.cases} chi-square tests with p > 0.001")
    assert res.passed, res.failures


def _fit(sweeps, variant, k, ns):
    return est.fit_rate_law([(n, k, sweeps[variant, n, "ag"].mean) for n in ns], variant)


def test_criterion_4_order_independent_scaling(sweeps, report):
    fit = _fit(sweeps, "oi", OI_K, OI_NS)
    floors = [
        sweeps["oi", n, "ag"].mean >= est.FLOOR_CONSTANT * sweeps["oi", n, "ag"].epsilon for n in OI_NS
    ]
    ratio = min(sweeps["oi", n, "ag"].mean / sweeps["oi", n, "ag"].epsilon for n in OI_NS)
    ok = fit.slope > 0 and fit.r_squared >= 0.9 and all(floors)
    report("4 order-independent scaling", ok,
           f"slope={fit.slope:.4g}, r2={fit.r_squared:.4f}, min mean/eps={ratio:.4f} "
           f"vs floor {est.FLOOR_CONSTANT:.4g}")
    assert ok


def test_criterion_5_order_dependent_scaling(sweeps, report):
    fit = _fit(sweeps, "od", OD_K, OD_NS)
    ok = fit.slope > 0 and fit.r_squared >= 0.9
    report("5 order-dependent scaling", ok, f"slope={fit.slope:.4g}, r2={fit.r_squared:.4f}")
    assert ok


def test_criterion_6_upper_bound_envelope(sweeps, report):
    worst = 0.0
    violations = []
    for (variant, n, measure), r in sweeps.items():
        bound = est.upper_bound_uc(n, r.k, variant)
        worst = max(worst, r.mean / bound)
        if r.mean > bound:
            violations.append((variant, n, measure, r.mean, bound))
    report("6 upper-bound envelope", not violations,
           f"{len(sweeps)} points, largest mean/bound = {worst:.3f}")
    assert not violations


def test_criterion_7_degenerate_exactness(report):
    total = 0
    nonzero = 0
    for n, k, variant in [(32, 2, "oi"), (1024, 4, "oi"), (16, 2, "od"), (1024, 2, "od")]:
        r = est.monte_carlo("ag", n, k, variant, 500, SEED, eps=0.0)
        total += r.trials
        nonzero += int(np.count_nonzero(r.values))
    report("7 degenerate exactness", nonzero == 0, f"{total} trials with eps=0, {nonzero} nonzero excesses")
    assert nonzero == 0


def _run_in(directory, monkeypatch, capsys, argv):
    monkeypatch.chdir(directory)
    code = main(argv)
    out = capsys.readouterr().out
    files = {p.name: p.read_bytes() for p in sorted(directory.iterdir())}
    return code, out, files


def test_criterion_8_determinism(tmp_path, monkeypatch, capsys, report):
    commands = [
        ["simulate", "--variant", "oi", "--measure", "ag", "--n", "256", "--k", "4",
         "--trials", "200", "--seed", "7", "--out", "point.csv"],
        ["sweep", "--variant", "od", "--measure", "ag,uc", "--n-list", "256,512,1024",
         "--k-list", "2", "--trials", "100", "--seed", "11", "--out", "grid.csv"],
        ["bounds", "--n-list", "32,256,4096", "--k", "2"],
        ["validate", "--seed", "5"],
    ]
    mismatched = []
    for i, argv in enumerate(commands):
        first = _run_in(_fresh(tmp_path, f"a{i}"), monkeypatch, capsys, argv)
        second = _run_in(_fresh(tmp_path, f"b{i}"), monkeypatch, capsys, argv)
        if first != second or first[0] != 0:
            mismatched.append(argv[0])
    grid = tmp_path / "a1"
    fit_runs = [_run_in(grid, monkeypatch, capsys, ["fit", "grid.csv", "--measure", "ag"]) for _ in range(2)]
    if fit_runs[0] != fit_runs[1] or fit_runs[0][0] != 0:
        mismatched.append("fit")
    report("8 determinism", not mismatched,
           "simulate, sweep, bounds, validate, fit byte-identical across runs"
           if not mismatched else f"differences in {mismatched}")
    assert not mismatched
    assert (tmp_path / "a1" / "grid.manifest").read_bytes() == (tmp_path / "b1" / "grid.manifest").read_bytes()


def _fresh(root, name):
    d = root / name
    d.mkdir()
    return d
