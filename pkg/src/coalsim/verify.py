"""Self-check suites behind ``coalsim verify``.

The deterministic suite checks exact identities of the special functions,
rates, Bell polynomials and limit curves.  The statistical suite runs
pre-registered simulation tests with fixed seeds at significance 0.01; a
failure there is a property of that one run and is never retried.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable

import mpmath
import numpy as np
from scipy import stats

from . import bell, limits, specfun
from .harness import converge_block_count, converge_spectrum, default_grid
from .rates import (
    BetaParams,
    build_rate_table,
    gamma_asymptotic_constant,
    gamma_moment,
    gamma_moment_direct,
    merger_rate,
    merger_size_pmf,
)
from .sim.chains import restrict, simulate_block_count, simulate_labelled, simulate_spectrum
from .sim.ensemble import SeedPolicy

SIGNIFICANCE = 0.01


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'}  {self.name}: {self.detail}"


def _rel(x: float, y: float) -> float:
    if x == y:
        return 0.0
    return abs(x - y) / max(abs(y), 1e-300)


# ---------------------------------------------------------------- closed-form oracles

def bolthausen_sznitman_rate(n: int, k: int) -> float:
    """beta(1,1): (k-2)!(n-k)!/(n-1)!."""
    return math.exp(math.lgamma(k - 1) + math.lgamma(n - k + 1) - math.lgamma(n))


def catalan(j: int) -> int:
    return math.comb(2 * j, j) // (j + 1)


def arcsine_rate(n: int, k: int) -> float:
    """beta(1/2,1/2): 4^(2-n)(k-1)!(n-k+1)! C_{k-2} C_{n-k} / (n-2)!."""
    lg = (
        (2 - n) * math.log(4.0)
        + math.lgamma(k)
        + math.lgamma(n - k + 2)
        + math.log(catalan(k - 2))
        + math.log(catalan(n - k))
        - math.lgamma(n - 1)
    )
    return math.exp(lg)


def arcsine_rate_as_printed(n: int, k: int) -> float:
    """The same expression without the 1/(n-2)! factor; agrees only for n <= 3."""
    return arcsine_rate(n, k) * math.factorial(n - 2)


def kingman_spectrum(t: float, i: int) -> float:
    c = 2.0 / (2.0 + t)
    return c * c * (1.0 - c) ** (i - 1)


def fdb_spectrum(params: BetaParams, i: int, t: float) -> float:
    """c_i(t) from a brute-force derivative of the composition at x = 0."""
    a = params.a
    _, k = limits.drift_constants(params)
    p = 1.0 / (a - 1.0)
    f_d = [math.prod(p - j for j in range(r)) * (1.0 + k * t) ** (p - r) for r in range(1, i + 1)]
    g_d = [math.prod(1.0 - a + j for j in range(r)) for r in range(1, i + 1)]
    return -bell.faa_di_bruno_oracle(i, f_d, g_d, 1.0) / math.factorial(i)


def random_params(count: int, seed: int, a_range=(0.05, 3.0), b_range=(0.05, 3.0), gap: float = 0.05):
    """Random (a, b) keeping a at least ``gap`` away from 1 and 2."""
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        a = rng.uniform(*a_range)
        if abs(a - 1) < gap or abs(a - 2) < gap:
            continue
        out.append(BetaParams(a, rng.uniform(*b_range)))
    return out


# ---------------------------------------------------------------- deterministic checks

def check_log_gamma(quick: bool) -> CheckResult:
    xs = np.geomspace(1e-3, 1e8, 60 if quick else 400)
    worst = 0.0
    for x in xs:
        ref = mpmath.loggamma(mpmath.mpf(float(x)))
        if abs(ref) < 1e-3:
            continue  # relative error is meaningless next to the zeros at 1 and 2
        worst = max(worst, float(abs((specfun.log_gamma(float(x)) - ref) / ref)))
    ok = worst <= 1e-13 and specfun.log_gamma(1.0) == 0.0 and _rel(specfun.log_gamma(5.0), math.log(24)) < 1e-15
    return CheckResult("log_gamma accuracy on [1e-3, 1e8]", ok, f"worst rel err {worst:.2e}")


def check_rising(quick: bool) -> CheckResult:
    rng = random.Random(1)
    worst_direct = 0.0
    for _ in range(100 if quick else 1000):
        x = rng.uniform(1e-3, 50.0)
        k = rng.randint(0, 30)
        direct = math.prod(x + j for j in range(k))
        worst_direct = max(worst_direct, _rel(specfun.rising_float(x, k), direct))
    worst_split = 0.0
    sign_ok = True
    for _ in range(100 if quick else 1000):
        x = rng.uniform(-3.0, 3.0)
        if x == round(x):
            continue
        k, m = rng.randint(0, 20), rng.randint(0, 20)
        lhs = specfun.rising(x, k) * specfun.rising(x + k, m)
        rhs = specfun.rising(x, k + m)
        sign_ok &= lhs.sign == rhs.sign
        worst_split = max(worst_split, abs(lhs.log_magnitude - rhs.log_magnitude))
    ok = worst_direct <= 1e-12 and worst_split <= 1e-10 and sign_ok
    return CheckResult("rising factorial powers", ok, f"direct {worst_direct:.1e}, split {worst_split:.1e}, signs {sign_ok}")


def check_rising_asymptotic(quick: bool) -> CheckResult:
    cases = [(0.5, 1.0, 0), (2.0, 1.0, 1), (0.7, 2.3, -1), (1.5, 0.5, 2)]
    ok = True
    gaps_all = []
    for a, b, z in cases:
        gaps = []
        for n in (10**2, 10**3, 10**4, 10**5, 10**6):
            exact = mpmath.rf(a, n) / mpmath.rf(b, n + z)
            gaps.append(float(abs(exact / specfun.rising_ratio_asymptotic(a, b, z, n) - 1)))
        # (2,1,1) is exact for every n; its gaps sit at rounding level
        ok &= all(g2 < g1 or g2 <= 1e-13 for g1, g2 in zip(gaps, gaps[1:]))
        gaps_all.append(gaps[-1])
    return CheckResult("rising-ratio asymptotics shrink monotonically", ok, f"gaps at 1e6 {max(gaps_all):.1e}")


def check_rate_examples(quick: bool) -> CheckResult:
    n_max = 60 if quick else 200
    worst = 0.0
    for params, oracle in ((BetaParams(1, 1), bolthausen_sznitman_rate), (BetaParams(0.5, 0.5), arcsine_rate)):
        table = build_rate_table(params, n_max)
        for m in range(2, n_max + 1):
            row = np.exp(table.log_row(m))
            for k in range(2, m + 1):
                worst = max(worst, _rel(float(row[k - 2]), oracle(m, k)))
    return CheckResult("rate tables vs product formulas", worst <= 1e-10, f"worst rel err {worst:.1e}")


def check_pitman(quick: bool) -> CheckResult:
    rows = 120 if quick else 500
    worst = 0.0
    for params in (BetaParams(0.5, 0.5), BetaParams(1.7, 0.3), BetaParams(3.0, 2.0)):
        table = build_rate_table(params, rows)
        prev = np.exp(table.log_row(2))
        for m in range(2, rows):
            nxt = np.exp(table.log_row(m + 1))
            rhs = nxt[:-1] + nxt[1:]
            worst = max(worst, float(np.max(np.abs(prev - rhs) / rhs)))
            prev = nxt
    return CheckResult(f"consistency recursion on {rows}-row tables", worst <= 1e-10, f"worst rel err {worst:.1e}")


def check_table_vs_direct(quick: bool) -> CheckResult:
    worst = 0.0
    shape = True
    for params in (BetaParams(0.5, 0.5), BetaParams(0.2, 3.0), BetaParams(2.5, 1.5)):
        table = build_rate_table(params, 200)
        for m in (2, 17, 200) if quick else range(2, 201):
            row = table.log_row(m)
            for k in range(2, m + 1):
                worst = max(worst, abs(row[k - 2] - merger_rate(params, m, k).log_magnitude))
            # positive and log-convex in k: the step ratio (a+k-2)/(b+m-k-1) grows with k
            shape &= bool(np.all(np.isfinite(row))) and bool(np.all(np.diff(row, 2) >= -1e-12))
    return CheckResult("table entries vs direct rates", worst <= 1e-10 and shape, f"worst log err {worst:.1e}, log-convex rows {shape}")


def check_merger_pmf(quick: bool) -> CheckResult:
    table = build_rate_table(BetaParams(0.5, 0.5), 50)
    p = merger_size_pmf(table, 50)
    brute = [math.comb(50, l) * math.exp(merger_rate(table.params, 50, l).log_magnitude) for l in range(2, 51)]
    brute = np.array(brute) / math.fsum(brute)
    bs = merger_size_pmf(build_rate_table(BetaParams(1, 1), 3), 3)
    ok = abs(p.sum() - 1) < 1e-12 and np.max(np.abs(p - brute)) < 1e-12 and np.allclose(bs, [0.75, 0.25], atol=1e-15)
    # the kernels' pair probability must equal the first pmf entry
    ok &= abs(table.pair_prob[50] - p[0]) < 1e-12
    return CheckResult("merger-size pmf", bool(ok), f"max gap {np.max(np.abs(p - brute)):.1e}")


def check_binomial_type(quick: bool) -> CheckResult:
    rng = random.Random(2)
    worst = 0.0
    for _ in range(20 if quick else 200):
        a, b = rng.uniform(0, 3), rng.uniform(0, 3)
        n = rng.randint(0, 60)
        lhs = math.fsum(math.comb(n, l) * specfun.rising_float(a, l) * specfun.rising_float(b, n - l) for l in range(n + 1))
        worst = max(worst, _rel(lhs, specfun.rising_float(a + b, n)))
    return CheckResult("binomial-type identity for rising powers", worst <= 1e-10, f"worst rel err {worst:.1e}")


def check_gamma_closed_forms(quick: bool) -> CheckResult:
    plist = random_params(5 if quick else 20, seed=3)
    ns = [2, 3, 5, 10, 50, 200] if quick else [2, 3, 4, 5, 7, 10, 20, 50, 100, 200, 500, 1000, 2000]
    worst = 0.0
    exact_ok = True
    rel_ok = 0.0
    for p in plist:
        for n in ns:
            for k in (0, 1, 2, 3):
                direct = gamma_moment_direct(p, n, k, "power")
                worst = max(worst, _rel(gamma_moment(p, n, k, "power"), direct))
            for k in (1, 3):
                direct = gamma_moment_direct(p, n, k, "falling")
                if direct != 0:
                    worst = max(worst, _rel(gamma_moment(p, n, k, "falling"), direct))
            exact_ok &= gamma_moment(p, n, 2, "falling") == n * (n - 1)
            g = {k: gamma_moment(p, n, k) for k in range(4)}
            f = {k: gamma_moment(p, n, k, "falling") for k in (1, 2, 3)}
            rel_ok = max(rel_ok, _rel(g[1], f[1] - g[0]), _rel(g[2], f[2] - g[1]), _rel(g[3], f[3] + g[1]))
    ok = worst <= 1e-9 and exact_ok and rel_ok <= 1e-9
    return CheckResult("gamma moments: closed forms vs direct sums", ok, f"worst {worst:.1e}, relations {rel_ok:.1e}, n(n-1) exact {exact_ok}")


def asymptotic_branches():
    """(params, k) pairs covering every branch of the asymptotic constants."""
    return [
        (BetaParams(0.5, 0.5), 0), (BetaParams(0.3, 2.0), 0), (BetaParams(1.5, 1.0), 0), (BetaParams(3.0, 1.0), 0),
        (BetaParams(0.5, 0.5), 1), (BetaParams(0.3, 2.0), 1), (BetaParams(3.0, 1.0), 1),
        (BetaParams(0.5, 1.0), 3), (BetaParams(3.0, 1.0), 3),
    ]


def check_gamma_asymptotics(quick: bool) -> CheckResult:
    ok = True
    worst = 0.0
    for p, k in asymptotic_branches():
        c, e = gamma_asymptotic_constant(p, k)
        gaps = [abs(gamma_moment(p, n, k) / (c * n**e) - 1.0) for n in (10**2, 10**3, 10**4, 10**5, 10**6)]
        ok &= all(g2 < g1 for g1, g2 in zip(gaps, gaps[1:]))
        worst = max(worst, gaps[-1])
    return CheckResult("gamma asymptotic ratios tend to 1 monotonically", ok, f"worst gap at 1e6 {worst:.1e}")


def check_bell(quick: bool) -> CheckResult:
    rng = random.Random(4)
    w = [rng.uniform(-2, 2) for _ in range(10)]
    worst = 0.0
    for i in range(1, 11):
        for l in range(1, i + 1):
            e = bell.partial_bell_enumerated(i, l, w)
            worst = max(worst, abs(bell.partial_bell_recurrence(i, l, w) - e) / max(1.0, abs(e)))
    ones = [1.0] * 12
    counts = all(math.fsum(bell.partial_bell(i, l, ones) for l in range(1, i + 1)) == bell.bell_number(i) for i in range(1, 11))
    facts = [float(math.factorial(j)) for j in range(1, 12)]
    lah = all(bell.partial_bell(i, k, facts) == bell.lah(i, k) for i in range(1, 11) for k in range(1, i + 1))
    ok = worst <= 1e-12 and counts and lah
    return CheckResult("partial Bell: recurrence vs enumeration, Stirling and Lah", ok, f"worst {worst:.1e}")


def _compose_series(v, w, order):
    """Coefficients of V(W(x)) up to x^order, V and W given by EGF coefficient lists, W(0)=0."""
    wser = np.zeros(order + 1)
    for j in range(1, order + 1):
        wser[j] = w[j - 1] / math.factorial(j)
    out = np.zeros(order + 1)
    power = np.zeros(order + 1)
    power[0] = 1.0
    for m in range(1, order + 1):
        power = np.convolve(power, wser)[: order + 1]
        out += v[m - 1] / math.factorial(m) * power
    return out


def check_egf(quick: bool) -> CheckResult:
    rng = random.Random(5)
    worst = 0.0
    for _ in range(5 if quick else 25):
        v = [rng.uniform(-1, 1) for _ in range(10)]
        w = [rng.uniform(-1, 1) for _ in range(10)]
        ser = _compose_series(v, w, 10)
        for i in range(1, 11):
            cb = bell.complete_bell(i, v, w)
            worst = max(worst, abs(cb - ser[i] * math.factorial(i)) / max(1.0, abs(cb)))
    return CheckResult("complete Bell = EGF composition coefficients", worst <= 1e-9, f"worst {worst:.1e}")


SPECTRUM_PARAMS = ((0.5, 0.5), (0.3, 2.0), (0.8, 1.0))
SPECTRUM_TIMES = (0.5, 1.0, 2.0)


def check_spectrum_fdb(quick: bool) -> CheckResult:
    worst = 0.0
    for a, b in SPECTRUM_PARAMS:
        p = BetaParams(a, b)
        for t in SPECTRUM_TIMES:
            for i in range(1, 9):
                worst = max(worst, _rel(limits.spectrum_limit(p, i, t), fdb_spectrum(p, i, t)))
    return CheckResult("spectrum formula vs Faa di Bruno enumeration (i<=8)", worst <= 1e-10, f"worst {worst:.1e}")


def check_spectrum_ode(quick: bool) -> CheckResult:
    worst = 0.0
    for a, b in SPECTRUM_PARAMS[:1] if quick else SPECTRUM_PARAMS:
        curve = limits.LimitCurve("spectrum_i", BetaParams(a, b), i=8)
        worst = max(worst, limits.verify_ode_solution(curve, 0.0, 2.0, 2000))
    return CheckResult("triangular spectrum system reproduces the formula (i<=8)", worst <= 1e-6, f"worst {worst:.1e}")


def check_spectrum_mass(quick: bool) -> CheckResult:
    # the tail decays like N^(a-2), so partial sums approach c(t) slowly
    ok = True
    worst_gf = 0.0
    gaps = []
    for a, b in SPECTRUM_PARAMS:
        p = BetaParams(a, b)
        for t in SPECTRUM_TIMES:
            cs = [limits.spectrum_limit(p, i, t) for i in range(1, 61)]
            c = limits.c_limit(p, t)
            g = [c - math.fsum(cs[:n]) for n in (15, 30, 60)]
            ok &= all(x > 0 for x in g) and g[0] > g[1] > g[2]
            gaps.append(g[2])
            series = math.fsum(ci * 0.5 ** (i + 1) for i, ci in enumerate(cs[:40]))
            worst_gf = max(worst_gf, abs(series - limits.gen_fun(p, t, 0.5)))
    ok &= worst_gf <= 1e-8
    return CheckResult("spectrum partial sums increase to c(t); series = gen_fun", ok,
                       f"gap at N=60 up to {max(gaps):.1e}, gen_fun {worst_gf:.1e}")


def check_kingman_spectrum(quick: bool) -> CheckResult:
    k = BetaParams.kingman()
    worst = max(_rel(limits.spectrum_limit(k, i, t), kingman_spectrum(t, i)) for t in (0.1, 0.5, 1, 2, 5) for i in range(1, 11))
    return CheckResult("Kingman spectrum c^2 (1-c)^(i-1)", worst <= 1e-10, f"worst {worst:.1e}")


def check_bernoulli_residual(quick: bool) -> CheckResult:
    worst = 0.0
    plist = random_params(5 if quick else 20, seed=6, a_range=(0.02, 0.98), gap=0.0) + [BetaParams.kingman()]
    for p in plist:
        g_full, _ = limits.drift_constants(p)
        for t in np.linspace(0, 10, 21):
            c = limits.c_limit(p, t)
            worst = max(worst, _rel(limits.c_limit_derivative(p, t), -g_full * c ** (2 - p.a)))
            if t > 0:
                cs = limits.c_star_limit(p, t)
                worst = max(worst, _rel(limits.c_star_limit_derivative(p, t), -g_full * cs ** (2 - p.a)))
    return CheckResult("analytic derivatives satisfy c' = -G c^(2-a)", worst <= 1e-9, f"worst {worst:.1e}")


def check_ode_solutions(quick: bool) -> CheckResult:
    steps = 20000 if quick else 100000
    p = BetaParams(0.5, 0.5)
    k = BetaParams.kingman()
    devs = {
        "c": limits.verify_ode_solution(limits.LimitCurve("c", p), 0, 10, steps),
        "c*": limits.verify_ode_solution(limits.LimitCurve("c_star", p), 0.25, 10, steps),
        "mean a>1": limits.verify_ode_solution(limits.LimitCurve("m_mean", BetaParams(3, 1)), 0, 10, steps),
        "g(x=0.3)": limits.verify_ode_solution(limits.LimitCurve("gen_fun_g", BetaParams(0.7, 2), x=0.3), 0, 5, steps),
    }
    for x in (-0.5, 0.0, 0.3, 0.9):
        devs[f"g a=.5 x={x}"] = limits.verify_ode_solution(limits.LimitCurve("gen_fun_g", p, x=x), 0, 10, steps)
    devs["G(x=0.5)"] = limits.verify_ode_solution(limits.LimitCurve("gen_fun_G", p, x=0.5), 0, 10, steps)
    kdev = max(
        limits.verify_ode_solution(limits.LimitCurve("c", k), 0, 10, steps),
        limits.verify_ode_solution(limits.LimitCurve("c_star", k), 0.25, 10, steps),
    )
    exact = max(max(_rel(limits.c_limit(k, t), 2 / (2 + t)), _rel(limits.c_star_limit(k, t), 2 / t)) for t in np.linspace(0.25, 10, 40))
    ok = max(devs.values()) <= 1e-8 and kdev <= 1e-10 and exact <= 1e-10
    return CheckResult("RK4 cross-check of c, c*, mean, g, G", ok, f"worst {max(devs.values()):.1e}, Kingman {kdev:.1e}/{exact:.1e}")


def check_mean_branches(quick: bool) -> CheckResult:
    worst = 0.0
    for p in random_params(10, seed=7, a_range=(0.02, 0.98), gap=0.0):
        for t in np.linspace(0, 5, 11):
            worst = max(worst, _rel(limits.mean_limit(p, t, -1.0), limits.c_limit(p, t)))
    return CheckResult("mean limit = c(t) for a<1, alpha=-1", worst == 0.0, f"worst {worst:.1e}")


DETERMINISTIC: list[Callable[[bool], CheckResult]] = [
    check_log_gamma, check_rising, check_rising_asymptotic,
    check_rate_examples, check_pitman, check_table_vs_direct, check_merger_pmf,
    check_binomial_type, check_gamma_closed_forms, check_gamma_asymptotics,
    check_bell, check_egf, check_spectrum_fdb, check_spectrum_ode, check_spectrum_mass,
    check_kingman_spectrum, check_bernoulli_residual, check_ode_solutions, check_mean_branches,
]


# ---------------------------------------------------------------- statistical procedures

def restriction_chi_square(params: BetaParams, n: int, extra: int, t: float, replicates: int, seed: int):
    """Block counts at time t of restricted (n+extra)-runs vs direct n-runs.

    Returns (p-value, observed table).  Counts take values 1..n.
    """
    big = build_rate_table(params, n + extra)
    small = build_rate_table(params, n)
    pol_big, pol_small = SeedPolicy(seed, stream=1), SeedPolicy(seed, stream=2)
    table = np.zeros((2, n), dtype=np.int64)
    for r in range(replicates):
        tr = simulate_labelled(big, n + extra, pol_big.generator(r), t_max=t)
        table[0, restrict(tr, n).block_count_at(t) - 1] += 1
        tr = simulate_labelled(small, n, pol_small.generator(r), t_max=t)
        table[1, tr.block_count_at(t) - 1] += 1
    keep = table.sum(axis=0) > 0
    res = stats.chi2_contingency(table[:, keep], correction=False)
    return float(res.pvalue), table


def _sizes_from_counts(row: np.ndarray) -> np.ndarray:
    return np.repeat(np.arange(1, len(row) + 1), row.astype(np.int64))


def temporal_coupling_ks(params: BetaParams, n: int, m: int, replicates: int, seed: int):
    """Time from the first m-block state to absorption vs fresh runs from the same sizes.

    Runs the size chain from n singletons with d=n (so the state is the full
    size multiset).  Each run that hits exactly m blocks yields one remaining
    time; a fresh chain started from the hit multiset yields the comparison
    sample.  Returns (p-value, number of hitting runs).
    """
    table = build_rate_table(params, n)
    pol_a, pol_b = SeedPolicy(seed, stream=3), SeedPolicy(seed, stream=4)
    after, fresh = [], []
    for r in range(replicates):
        tr = simulate_spectrum(table, n, n, None, pol_a.generator(r))
        hit = np.nonzero(tr.block_counts == m)[0]
        if hit.size == 0:
            continue
        j = int(hit[0])
        after.append(tr.absorption_time - float(tr.times[j]))
        sizes = _sizes_from_counts(tr.type_counts[j])
        restart = simulate_spectrum(table, None, n, None, pol_b.generator(r), initial_sizes=sizes)
        fresh.append(restart.absorption_time)
    res = stats.ks_2samp(after, fresh)
    return float(res.pvalue), len(after)


def embedded_count_ks(params: BetaParams, n: int, replicates: int, seed: int):
    """Absorption times of the count chain vs the size chain (two-sample KS)."""
    table = build_rate_table(params, n)
    pol_a, pol_b = SeedPolicy(seed, stream=5), SeedPolicy(seed, stream=6)
    x = [simulate_block_count(table, n, None, pol_a.generator(r)).absorption_time for r in range(replicates)]
    y = [simulate_spectrum(table, n, 1, None, pol_b.generator(r)).absorption_time for r in range(replicates)]
    return float(stats.ks_2samp(x, y).pvalue)


def holding_time_z(params: BetaParams, m: int, replicates: int, seed: int) -> float:
    """z-score of the mean first holding time at m blocks against 1/row_total[m]."""
    table = build_rate_table(params, m)
    pol = SeedPolicy(seed, stream=m)
    h = np.array([simulate_block_count(table, m, None, pol.generator(r)).times[1] for r in range(replicates)])
    mu = 1.0 / table.row_totals[m]
    return float((h.mean() - mu) / (h.std(ddof=1) / math.sqrt(replicates)))


# ---------------------------------------------------------------- statistical checks

def stat_pair_time(quick: bool) -> CheckResult:
    reps = 20000 if quick else 100000
    z = holding_time_z(BetaParams(0.5, 0.5), 2, reps, seed=11)
    return CheckResult("first event from 2 blocks ~ Exp(1)", abs(z) <= 3, f"z = {z:.2f}")


def stat_triple_merger(quick: bool) -> CheckResult:
    reps = 20000 if quick else 100000
    table = build_rate_table(BetaParams(1, 1), 3)
    pol = SeedPolicy(12)
    two = sum(int(simulate_block_count(table, 3, None, pol.generator(r)).counts[1] == 2) for r in range(reps))
    freq = two / reps
    return CheckResult("beta(1,1) from 3 blocks: pair merger w.p. 3/4", abs(freq - 0.75) <= 0.006, f"freq {freq:.4f}")


def stat_holding_moments(quick: bool) -> CheckResult:
    zs = {m: holding_time_z(BetaParams(0.5, 0.5), m, 4000 if quick else 20000, seed=13) for m in (10, 100, 1000)}
    return CheckResult("holding-time means 1/row_total", all(abs(z) <= 4 for z in zs.values()), ", ".join(f"m={m}: z={z:.2f}" for m, z in zs.items()))


def stat_kingman_height(quick: bool) -> CheckResult:
    n = 1000
    table = build_rate_table(BetaParams.kingman(), n)
    pol = SeedPolicy(14)
    reps = 2000 if quick else 10000
    h = np.array([simulate_block_count(table, n, None, pol.generator(r)).absorption_time for r in range(reps)])
    target = 2.0 * (1.0 - 1.0 / n)
    z = (h.mean() - target) / (h.std(ddof=1) / math.sqrt(reps))
    return CheckResult("Kingman mean absorption time 2(1-1/n)", abs(z) <= 4, f"mean {h.mean():.4f}, z={z:.2f}")


def stat_embedded(quick: bool) -> CheckResult:
    p = embedded_count_ks(BetaParams(0.5, 0.5), 100, 2000 if quick else 10000, seed=15)
    return CheckResult("count chain vs size chain absorption times (KS)", p >= SIGNIFICANCE, f"p = {p:.3f}")


def stat_restriction(quick: bool) -> CheckResult:
    p, _ = restriction_chi_square(BetaParams(0.5, 0.5), 4, 2, 0.3, 10000 if quick else 100000, seed=16)
    return CheckResult("restriction of 6-runs to [4] vs 4-runs (chi-square)", p >= SIGNIFICANCE, f"p = {p:.3f}")


def stat_temporal(quick: bool) -> CheckResult:
    p, hits = temporal_coupling_ks(BetaParams(0.5, 0.5), 8, 4, 4000 if quick else 20000, seed=17)
    return CheckResult("restart at first 4-block state (KS)", p >= SIGNIFICANCE, f"p = {p:.3f} over {hits} runs")


def stat_convergence(quick: bool) -> CheckResult:
    ns = [100, 1000] if quick else [100, 1000, 10000]
    p = BetaParams(0.5, 0.5)
    rc = converge_block_count(p, -1.0, ns, 200, default_grid(0, 3), seed=18)
    rk = converge_block_count(BetaParams.kingman(), -1.0, ns, 200, default_grid(0, 3), seed=19)
    rs = converge_spectrum(p, 5, ns, 200, default_grid(0, 2), seed=20)
    ok = rc.final_error <= 0.03 and rk.final_error <= 0.02 and rs.final_error <= 0.03 and rc.monotone()
    return CheckResult("hydrodynamic limits of count, Kingman and spectrum", ok,
                       f"count {rc.final_error:.4f}, Kingman {rk.final_error:.4f}, spectrum {rs.final_error:.4f}")


STATISTICAL: list[Callable[[bool], CheckResult]] = [
    stat_pair_time, stat_triple_merger, stat_holding_moments, stat_kingman_height,
    stat_embedded, stat_restriction, stat_temporal, stat_convergence,
]


def run_suite(quick: bool = False, statistical: bool = False, log=print) -> bool:
    checks = list(DETERMINISTIC) + (list(STATISTICAL) if statistical else [])
    ok = True
    for check in checks:
        try:
            res = check(quick)
        except Exception as exc:  # a crashing check is a failing check
            res = CheckResult(check.__name__, False, f"{type(exc).__name__}: {exc}")
        ok &= res.ok
        log(res.line())
    return ok
