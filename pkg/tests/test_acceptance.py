"""Acceptance suite: one test and one summary line per criterion.

Criteria that cannot be met are asserted at their literal thresholds and
marked ``xfail(strict=True)``; their summary line reads FAIL.  Parts of such
criteria that do hold are asserted separately.

    python3 -m pytest tests/test_acceptance.py -v
"""
import math
import time

import numpy as np
import pytest
from scipy.special import gammaln

from coalsim import limits
from coalsim.cli import main as cli_main
from coalsim.harness import (
    STAR_GRID_START,
    converge_block_count,
    converge_mean_stays_infinite,
    converge_spectrum,
    default_grid,
)
from coalsim.limits import LimitCurve, verify_ode_solution
from coalsim.rates import BetaParams, build_rate_table, gamma_asymptotic_constant, gamma_moment
from coalsim.sim.chains import simulate_spectrum
from coalsim.sim.ensemble import SeedPolicy
from coalsim.verify import (
    SIGNIFICANCE,
    arcsine_rate,
    asymptotic_branches,
    bolthausen_sznitman_rate,
    fdb_spectrum,
    kingman_spectrum,
    random_params,
    restriction_chi_square,
    temporal_coupling_ks,
)

HALF = BetaParams(0.5, 0.5)
KING = BetaParams.kingman()
N_LIST = [100, 1000, 10_000]
REPLICATES = 200
SPECTRUM_PARAMS = [BetaParams(0.5, 0.5), BetaParams(0.3, 2.0), BetaParams(0.8, 1.0)]
SPECTRUM_TIMES = [0.5, 1.0, 2.0]


def rel(x, y):
    return abs(x - y) / abs(y)


def fmt_list(xs):
    return "/".join(f"{x:.3g}" for x in xs)


# ---------------------------------------------------------------- 1

def test_criterion_01_rate_exactness(acceptance):
    start = time.perf_counter()
    worst = 0.0
    for params, oracle in ((BetaParams(1, 1), bolthausen_sznitman_rate), (HALF, arcsine_rate)):
        table = build_rate_table(params, 200)
        for m in range(2, 201):
            row = np.exp(table.log_row(m))
            exact = np.array([oracle(m, k) for k in range(2, m + 1)])
            worst = max(worst, float(np.max(np.abs(row - exact) / exact)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 1.0
    acceptance(1, ok, f"rate tables n<=200 vs product formulas: worst rel err {worst:.2e}, {elapsed:.2f} s")
    assert worst <= 1e-10
    assert elapsed < 1.0


# ---------------------------------------------------------------- 2

def test_criterion_02_consistency_recursion(acceptance):
    worst = 0.0
    for params in (HALF, BetaParams(1, 1), BetaParams(0.2, 3.0), BetaParams(2.5, 0.7)):
        table = build_rate_table(params, 501)
        prev = np.exp(table.log_row(2))
        for m in range(2, 501):
            nxt = np.exp(table.log_row(m + 1))
            rhs = nxt[:-1] + nxt[1:]
            worst = max(worst, float(np.max(np.abs(prev - rhs) / rhs)))
            prev = nxt
    acceptance(2, worst <= 1e-10, f"lambda(m,k) = lambda(m+1,k) + lambda(m+1,k+1) on 500 rows: worst rel err {worst:.2e}")
    assert worst <= 1e-10


# ---------------------------------------------------------------- 3

def _direct_moments(params, n):
    """gamma_n^(k), k=0..3, by summing C(n,l) lambda_{n,l} (l-1)^k with rates from log-gamma."""
    a, b = params.a, params.b
    ls = np.arange(2, n + 1, dtype=float)
    log_terms = (
        gammaln(n + 1.0) - gammaln(ls + 1.0) - gammaln(n - ls + 1.0)
        + gammaln(a + ls - 2.0) - gammaln(a)
        + gammaln(b + n - ls) - gammaln(b)
        - gammaln(a + b + n - 2.0) + gammaln(a + b)
    )
    terms = np.exp(log_terms)
    return [math.fsum(terms * (ls - 1.0) ** k) for k in range(4)]


def test_criterion_03_gamma_moments(acceptance):
    plist = random_params(20, seed=2024)
    worst = 0.0
    exact = True
    for p in plist:
        assert p.a not in (1.0, 2.0)
        for n in range(2, 2001):
            direct = _direct_moments(p, n)
            for k in range(4):
                worst = max(worst, rel(gamma_moment(p, n, k), direct[k]))
            exact &= gamma_moment(p, n, 2, "falling") == n * (n - 1)
    asym = []
    asym_ok = True
    for p, k in asymptotic_branches():
        c, e = gamma_asymptotic_constant(p, k)
        n = 10**6
        gap = abs(gamma_moment(p, n, k) / (c * n**e) - 1.0)
        bound = 10.0 * n ** (-min(1.0, abs(1.0 - p.a)))
        asym_ok &= gap <= bound
        asym.append(f"{p.a:g}/{p.b:g}/k{k}:{gap:.1e}<={bound:.0e}")
    ok = worst <= 1e-9 and exact and asym_ok
    acceptance(3, ok, f"closed forms vs direct sums (20 params, n=2..2000, k=0..3): worst {worst:.2e}; "
                      f"n(n-1) exact {exact}; asymptotic gaps at 1e6 [{', '.join(asym)}]")
    assert worst <= 1e-9
    assert exact
    assert asym_ok


# ---------------------------------------------------------------- 4

def test_criterion_04_ode_residuals(acceptance):
    steps = 100_000
    devs = {
        "c": verify_ode_solution(LimitCurve("c", HALF), 0.0, 10.0, steps),
        "c*": verify_ode_solution(LimitCurve("c_star", HALF), 0.25, 10.0, steps),
        "m(a=.5,alpha=-1)": verify_ode_solution(LimitCurve("m_mean", HALF, alpha=-1.0), 0.0, 10.0, steps),
        "m(a=.5,alpha=-.5)": verify_ode_solution(LimitCurve("m_mean", HALF, alpha=-0.5), 0.25, 10.0, steps),
        "m(a=3,b=1)": verify_ode_solution(LimitCurve("m_mean", BetaParams(3.0, 1.0)), 0.0, 10.0, steps),
    }
    for x in (-0.5, 0.0, 0.3, 0.9):
        devs[f"g(x={x})"] = verify_ode_solution(LimitCurve("gen_fun_g", HALF, x=x), 0.0, 10.0, steps)
    devs["g(a=.7,b=2,x=.3)"] = verify_ode_solution(LimitCurve("gen_fun_g", BetaParams(0.7, 2.0), x=0.3), 0.0, 10.0, steps)
    ts = np.linspace(0.0, 10.0, 101)
    king_c = max(rel(limits.c_limit(KING, t), 2.0 / (2.0 + t)) for t in ts)
    king_cs = max(rel(limits.c_star_limit(KING, t), 2.0 / t) for t in ts[ts >= 0.25])
    king_rk = max(
        verify_ode_solution(LimitCurve("c", KING), 0.0, 10.0, steps),
        verify_ode_solution(LimitCurve("c_star", KING), 0.25, 10.0, steps),
    )
    worst = max(devs.values())
    ok = worst <= 1e-8 and max(king_c, king_cs, king_rk) <= 1e-10
    acceptance(4, ok, f"RK4 vs closed forms worst {worst:.1e} ({max(devs, key=devs.get)}); "
                      f"Kingman 2/(2+t) {king_c:.1e}, 2/t {king_cs:.1e}, RK4 {king_rk:.1e}")
    assert worst <= 1e-8
    assert king_c <= 1e-10 and king_cs <= 1e-10 and king_rk <= 1e-10


# ---------------------------------------------------------------- 5

def _spectrum_checks():
    fdb = 0.0
    for p in SPECTRUM_PARAMS:
        for t in SPECTRUM_TIMES:
            for i in range(1, 9):
                fdb = max(fdb, rel(limits.spectrum_limit(p, i, t), fdb_spectrum(p, i, t)))
    # RK4 from the initial state (1,0,...,0); the deviation is the worst over all of [0, 2]
    ode = max(verify_ode_solution(LimitCurve("spectrum_i", p, i=8), 0.0, 2.0, 4000) for p in SPECTRUM_PARAMS)
    mass = 0.0
    for p in SPECTRUM_PARAMS:
        for t in SPECTRUM_TIMES:
            s = math.fsum(limits.spectrum_limit(p, i, t) for i in range(1, 61))
            mass = max(mass, abs(limits.c_limit(p, t) - s))
    gf = 0.0
    for p in SPECTRUM_PARAMS:
        for t in SPECTRUM_TIMES:
            series = math.fsum(limits.spectrum_limit(p, i, t) * 0.5**i for i in range(1, 61))
            gf = max(gf, abs(series - limits.gen_fun(p, t, 0.5)))
    return fdb, ode, mass, gf


@pytest.fixture(scope="module")
def spectrum_checks():
    return _spectrum_checks()


def test_criterion_05_attainable_parts(spectrum_checks):
    fdb, ode, _, gf = spectrum_checks
    assert fdb <= 1e-6
    assert ode <= 1e-6
    assert gf <= 1e-8


@pytest.mark.xfail(strict=True, reason="sum of the first 60 classes misses c(t) by 1e-4..1e-3: the tail decays like 60^(a-2)")
def test_criterion_05_spectrum_equivalence(acceptance, spectrum_checks):
    fdb, ode, mass, gf = spectrum_checks
    ok = fdb <= 1e-6 and ode <= 1e-6 and mass <= 1e-6 and gf <= 1e-8
    acceptance(5, ok, f"Faa di Bruno {fdb:.1e} (<=1e-6), triangular RK4 {ode:.1e} (<=1e-6), "
                      f"|c - sum_(i<=60) c_i| {mass:.1e} (<=1e-6 required), gen_fun vs series {gf:.1e} (<=1e-8)")
    assert fdb <= 1e-6
    assert ode <= 1e-6
    assert gf <= 1e-8
    assert mass <= 1e-6


# ---------------------------------------------------------------- 6

def test_criterion_06_kingman_spectrum(acceptance):
    worst = max(
        rel(limits.spectrum_limit(KING, i, t), kingman_spectrum(t, i))
        for t in (0.1, 0.5, 1.0, 2.0, 5.0, 10.0)
        for i in range(1, 11)
    )
    acceptance(6, worst <= 1e-10, f"Kingman c_i = c^2 (1-c)^(i-1), i<=10: worst rel err {worst:.1e}")
    assert worst <= 1e-10


# ---------------------------------------------------------------- 7

def test_criterion_07_hydrodynamics(acceptance):
    start = time.perf_counter()
    rep = converge_block_count(HALF, -1.0, N_LIST, REPLICATES, default_grid(0.0, 3.0, 64), seed=7, tolerance=0.03)
    elapsed = time.perf_counter() - start
    ok = rep.final_error <= 0.03 and rep.monotone() and elapsed <= 600
    acceptance(7, ok, f"a=b=0.5, alpha=-1: sup errors {fmt_list(rep.sup_errors)} for n={fmt_list(N_LIST)} "
                      f"(95% CI {fmt_list(rep.ci_halfwidths)}), non-increasing {rep.monotone()}, {elapsed:.1f} s")
    assert rep.final_error <= 0.03
    assert rep.monotone()
    assert elapsed <= 600


# ---------------------------------------------------------------- 8

@pytest.fixture(scope="module")
def star_report():
    return converge_block_count(HALF, -0.5, N_LIST, REPLICATES, default_grid(STAR_GRID_START, 3.0, 64), seed=8, tolerance=0.05)


def test_criterion_08_wrong_branch_is_worse(star_report):
    wrong = star_report.diagnostics["wrong_branch_sup_errors"][-1]
    assert wrong > 3 * star_report.final_error


@pytest.mark.xfail(strict=True, reason="an alpha=-0.5 ensemble at n=1e4 starts from 100 rescaled blocks, far from c*(t)")
def test_criterion_08_phase_transition(acceptance, star_report):
    rep = star_report
    wrong = rep.diagnostics["wrong_branch_sup_errors"]
    finite = rep.diagnostics["finite_start_sup_errors"]
    ok = rep.final_error <= 0.05 and wrong[-1] > 3 * rep.final_error
    acceptance(8, ok, f"alpha=-0.5: relative sup error vs c* {fmt_list(rep.sup_errors)} (<=0.05 required at n=1e4), "
                      f"vs c {fmt_list(wrong)} (ratio {wrong[-1] / rep.final_error:.1f}x), "
                      f"vs finite-start solution {fmt_list(finite)}")
    assert wrong[-1] > 3 * rep.final_error
    assert rep.final_error <= 0.05


# ---------------------------------------------------------------- 9

@pytest.mark.xfail(strict=True, reason="the mean decays at rate (a+b-1)/(a-1)=1.5, not 2")
def test_criterion_09_stays_infinite_mean(acceptance):
    p = BetaParams(3.0, 1.0)
    grid = default_grid(0.0, 1.0, 64)
    rep = converge_mean_stays_infinite(p, [10_000], REPLICATES, grid, seed=9)
    # the criterion's oracle is exp(-2t); the report's own oracle uses rate 1.5
    err_rate2 = rep.diagnostics["rate_a_plus_b_sup_errors"][-1]
    acceptance(9, err_rate2 <= 0.02, f"a=3,b=1,n=1e4: sup |mean/n - exp(-2t)| = {err_rate2:.3f} (<=0.02 required); "
                                  f"vs exp(-1.5t) {rep.final_error:.3f} with 95% CI {rep.ci_halfwidths[-1]:.3f}")
    assert err_rate2 <= 0.02


# ---------------------------------------------------------------- 10

def test_criterion_10_spectrum_convergence(acceptance):
    p = HALF
    rep = converge_spectrum(p, 5, [10_000], REPLICATES, default_grid(0.0, 2.0, 64), seed=10, tolerance=0.03)
    per_class = rep.diagnostics["per_class_sup_errors"][-1]
    n = 10_000
    table = build_rate_table(p, n)
    pol = SeedPolicy(10, stream=n)
    conserved = all(simulate_spectrum(table, n, 5, None, pol.generator(r)).mass_conserved() for r in range(REPLICATES))
    ok = rep.final_error <= 0.03 and conserved
    acceptance(10, ok, f"a=b=0.5, d=5, n=1e4: per-class sup errors {fmt_list(per_class)} (CI {rep.ci_halfwidths[-1]:.3g}); "
                       f"mass conserved at every event of {REPLICATES} runs: {conserved}")
    assert rep.final_error <= 0.03
    assert conserved


# ---------------------------------------------------------------- 11

def test_criterion_11_distributional(acceptance):
    p_restrict, table = restriction_chi_square(HALF, 4, 2, 0.3, 100_000, seed=16)
    p_temporal, hits = temporal_coupling_ks(HALF, 8, 4, 20_000, seed=17)
    ok = p_restrict >= SIGNIFICANCE and p_temporal >= SIGNIFICANCE
    acceptance(11, ok, f"restriction chi-square (n=4 from 6, 1e5 runs) p={p_restrict:.3f}; "
                       f"temporal coupling KS ({hits} hits) p={p_temporal:.3f}; significance {SIGNIFICANCE}")
    assert table.sum() == 200_000
    assert p_restrict >= SIGNIFICANCE
    assert p_temporal >= SIGNIFICANCE


# ---------------------------------------------------------------- 12

def test_criterion_12_determinism(acceptance, tmp_path, monkeypatch):
    runs = {
        "simulate": ["simulate", "--a", "0.5", "--b", "0.5", "--n", "2000", "--replicates", "64", "--seed", "12",
                     "--grid", "0:0.05:16", "--out", "out.csv"],
        "spectrum": ["spectrum", "--a", "0.5", "--b", "0.5", "--d", "5", "--n", "2000", "--replicates", "64",
                     "--seed", "12", "--grid", "0:2:16", "--alpha", "-1", "--out", "out.csv"],
        "converge": ["converge", "count", "--a", "0.5", "--b", "0.5", "--n-list", "100,1000", "--replicates", "64",
                     "--seed", "12", "--out", "out.json"],
    }
    same = {}
    for name, argv in runs.items():
        outputs = []
        for j, threads in enumerate(("1", "8", "1")):
            run_dir = tmp_path / f"{name}{j}"
            run_dir.mkdir()
            monkeypatch.chdir(run_dir)
            monkeypatch.setenv("COALSIM_THREADS", threads)
            assert cli_main(argv) == 0
            files = sorted(run_dir.iterdir())
            assert len(files) == 2  # data plus JSON metadata, or report plus error CSV
            outputs.append([(f.name, f.read_bytes()) for f in files])
        same[name] = outputs[0] == outputs[1] == outputs[2]
    ok = all(same.values())
    acceptance(12, ok, "byte-identical files for 1, 8 and again 1 worker processes: " + ", ".join(f"{k} {v}" for k, v in same.items()))
    assert ok
