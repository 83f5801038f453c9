"""Deterministic small-time limits of the rescaled beta-coalescent.

With ``K = Gamma(a+b)/((2-a)Gamma(b))`` and ``G_full = K/(1-a)`` the rescaled
block count solves ``c' = -G_full c^(2-a)``, so

    c(t)  = (1 + K t)^(1/(a-1))        started from 1,
    c*(t) = (K t)^(1/(a-1))            started from infinity.

The size-class densities ``c_i`` are Taylor coefficients of the generating
function ``G(t,x) = c(t) - ((1-x)^(a-1) + K t)^(1/(a-1))``; expanding the
composition gives a complete Bell polynomial with alternating outer weights.
That sum cancels badly once ``i`` is large, so it is evaluated in mpmath at
a working precision chosen from the size of the cancellation.

Kingman's coalescent is the case a=0, b=1 of every formula here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import mpmath
import numpy as np

from .bell import MAX_COMPOSITION_SIZE, enumerate_weighted_compositions, partial_bell_table
from .errors import DomainError, RegimeError, StepSizeError
from .rates import BetaParams, drift_constants

#: c* and c*_i accept t down to this value; the pole sits at t=0
T_MIN = 1e-9
CURVE_KINDS = ("c", "c_star", "m_mean", "spectrum_i", "spectrum_infty", "gen_fun_g", "gen_fun_G")


@dataclass(frozen=True)
class DriftConstants:
    G_full: float
    K: float

    @classmethod
    def of(cls, params: BetaParams) -> "DriftConstants":
        g, k = drift_constants(params)
        return cls(g, k)


def _require_cdi(params: BetaParams, what: str) -> None:
    if not params.is_kingman and params.a >= 1:
        raise RegimeError(f"{what} needs a < 1 (coming down from infinity), got a={params.a}")


def _check_t(t: float, positive: bool = False) -> None:
    if not math.isfinite(t) or t < 0:
        raise DomainError(f"time must be finite and >= 0, got {t!r}")
    if positive and t < T_MIN:
        raise DomainError(f"time must be >= {T_MIN} (pole at t=0), got {t!r}")


# ---------------------------------------------------------------- block count

def c_limit(params: BetaParams, t: float) -> float:
    """Rescaled block count started from one unit of mass."""
    _require_cdi(params, "c(t)")
    _check_t(t)
    _, k = drift_constants(params)
    return (1.0 + k * t) ** (1.0 / (params.a - 1.0))


def c_limit_derivative(params: BetaParams, t: float) -> float:
    _require_cdi(params, "c(t)")
    _check_t(t)
    _, k = drift_constants(params)
    p = 1.0 / (params.a - 1.0)
    return k * p * (1.0 + k * t) ** (p - 1.0)


def c_star_limit(params: BetaParams, t: float) -> float:
    """Rescaled block count started from infinitely many blocks."""
    _require_cdi(params, "c*(t)")
    _check_t(t, positive=True)
    _, k = drift_constants(params)
    return (k * t) ** (1.0 / (params.a - 1.0))


def c_star_limit_derivative(params: BetaParams, t: float) -> float:
    _require_cdi(params, "c*(t)")
    _check_t(t, positive=True)
    _, k = drift_constants(params)
    p = 1.0 / (params.a - 1.0)
    return k * p * (k * t) ** (p - 1.0)


def mean_decay_rate(params: BetaParams) -> float:
    """Exponential rate of the rescaled mean when a > 1: (a+b-1)/(a-1)."""
    a, b = params.a, params.b
    if params.is_kingman or a <= 1:
        raise RegimeError(f"the exponential mean regime needs a > 1, got a={a}")
    return (a + b - 1.0) / (a - 1.0)


def mean_limit(params: BetaParams, t: float, alpha: float) -> float:
    """Limit of n^alpha E[N_n(t n^beta)].

    a < 1 and alpha = -1 gives c(t); a < 1 and -1 < alpha < 0 gives c*(t);
    a > 1 and alpha = -1 (no time change) gives exp(-(a+b-1)/(a-1) t).
    """
    a = params.a
    if not params.is_kingman and a in (1.0, 2.0):
        raise RegimeError(f"mean limit undefined at a={a}")
    if params.is_kingman or a < 1:
        if alpha == -1:
            return c_limit(params, t)
        if -1 < alpha < 0:
            return c_star_limit(params, t)
        raise RegimeError(f"a < 1 supports alpha in [-1, 0), got {alpha}")
    if alpha == -1:
        _check_t(t)
        return math.exp(-mean_decay_rate(params) * t)
    raise RegimeError(f"a > 1 supports alpha = -1 only, got {alpha}")


# ---------------------------------------------------------------- generating function

def g_transform(params: BetaParams, t: float, x: float) -> float:
    """c(t) - G(t,x); solves the same Bernoulli equation as c with g(0,x) = 1-x."""
    _require_cdi(params, "the generating function")
    _check_t(t)
    if not -1 < x < 1:
        raise DomainError(f"x must lie in (-1, 1), got {x!r}")
    _, k = drift_constants(params)
    a = params.a
    return ((1.0 - x) ** (a - 1.0) + k * t) ** (1.0 / (a - 1.0))


def gen_fun(params: BetaParams, t: float, x: float) -> float:
    """G(t,x) = sum_i c_i(t) x^i."""
    return c_limit(params, t) - g_transform(params, t, x)


# ---------------------------------------------------------------- spectrum

# working precision never drops below this many digits
_BASE_DPS = 30
# tables of B_{i,m} are cached at precisions rounded up to this step
_DPS_STEP = 40


@lru_cache(maxsize=64)
def _bell_rows(a: float, n: int, dps: int):
    """Per i <= n: (1/(1-a))^(rising m) B_{i,m}((1-a)^(rising .)) / i! for m = 1..i."""
    with mpmath.workdps(dps):
        one_minus = mpmath.mpf(1) - mpmath.mpf(a)
        w = [mpmath.rf(one_minus, j) for j in range(1, n + 1)]
        table = partial_bell_table(n, w)
        inv = 1 / one_minus
        rows = []
        for i in range(1, n + 1):
            fact = mpmath.factorial(i)
            rows.append([mpmath.rf(inv, m) * table[i][m] / fact for m in range(1, i + 1)])
        return rows


def _table_size(i: int) -> int:
    # one cached table serves every class up to the next multiple of 64
    return 64 * math.ceil(i / 64)


def _bell_sum(a: float, i: int, u: float, dps: int):
    """sum_m coef_{i,m} (-u)^(m-1) in mpmath at the given precision."""
    rows = _bell_rows(float(a), _table_size(i), dps)
    with mpmath.workdps(dps):
        uu = -mpmath.mpf(u)
        acc = mpmath.mpf(0)
        power = mpmath.mpf(1)
        for coef in rows[i - 1]:
            acc += coef * power
            power *= uu
        return acc


def _needed_dps(i: int, u: float) -> int:
    # terms grow like ((1+u)/(1-u))^i relative to the sum
    if u >= 1.0:
        return _BASE_DPS + 16 * i
    loss = i * math.log10((1.0 + u) / (1.0 - u)) if i > 1 else 0.0
    return _DPS_STEP * math.ceil((_BASE_DPS + loss) / _DPS_STEP)


def _spectrum_from_total(params: BetaParams, i: int, total: float) -> float:
    a = params.a
    u = total ** (1.0 - a)
    dps = _needed_dps(i, u)
    val = _bell_sum(a, i, u, dps)
    check = _bell_sum(a, i, u, dps + _DPS_STEP)
    if val != 0 and abs(check - val) > 1e-15 * abs(check):
        # heuristic precision fell short; push further
        dps += 4 * _DPS_STEP
        check = _bell_sum(a, i, u, dps)
    return float(check * mpmath.mpf(total) ** (2 - mpmath.mpf(a)))


def spectrum_limit(params: BetaParams, i: int, t: float) -> float:
    """Limit density c_i(t) of blocks of size i (per unit of initial mass)."""
    _require_cdi(params, "spectrum limit")
    _check_t(t)
    if i < 1:
        raise DomainError(f"size class must be >= 1, got {i}")
    if t == 0:
        return 1.0 if i == 1 else 0.0
    return _spectrum_from_total(params, i, c_limit(params, t))


def spectrum_limit_infty(params: BetaParams, i: int, t: float) -> float:
    """(c*(t)^(2-a)/i!) B_i((1/(1-a))^(rising .), (1-a)^(rising .)).

    Intended for the process started from infinitely many singletons.  It is
    not the t -> 0 shift of :func:`spectrum_limit`: its sizes do not add up
    to c*(t).
    """
    _require_cdi(params, "spectrum limit")
    _check_t(t, positive=True)
    if i < 1:
        raise DomainError(f"size class must be >= 1, got {i}")
    a = params.a
    rows = _bell_rows(float(a), _table_size(i), _BASE_DPS + _DPS_STEP)
    with mpmath.workdps(_BASE_DPS):
        s = mpmath.fsum(rows[i - 1])
    return float(s) * c_star_limit(params, t) ** (2.0 - a)


def spectrum_tail(params: BetaParams, d: int, t: float) -> float:
    """Mass of blocks larger than d: c(t) - sum_{i<=d} c_i(t)."""
    return c_limit(params, t) - math.fsum(spectrum_limit(params, i, t) for i in range(1, d + 1))


# ---------------------------------------------------------------- curves

@dataclass(frozen=True)
class LimitCurve:
    """A closed-form limit as a function of time."""

    kind: str
    params: BetaParams
    alpha: float = -1.0
    i: int | None = None
    x: float | None = None

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise DomainError(f"unknown curve kind {self.kind!r}")
        if self.kind in ("spectrum_i", "spectrum_infty") and (self.i is None or self.i < 1):
            raise DomainError(f"{self.kind} needs a size class i >= 1")
        if self.kind in ("gen_fun_g", "gen_fun_G") and self.x is None:
            raise DomainError(f"{self.kind} needs x")

    def __call__(self, t: float) -> float:
        p = self.params
        if self.kind == "c":
            return c_limit(p, t)
        if self.kind == "c_star":
            return c_star_limit(p, t)
        if self.kind == "m_mean":
            return mean_limit(p, t, self.alpha)
        if self.kind == "spectrum_i":
            return spectrum_limit(p, self.i, t)
        if self.kind == "spectrum_infty":
            return spectrum_limit_infty(p, self.i, t)
        if self.kind == "gen_fun_g":
            return g_transform(p, t, self.x)
        return gen_fun(p, t, self.x)

    def evaluate(self, grid) -> np.ndarray:
        return np.array([self(float(t)) for t in grid])

    @property
    def starts_at_infinity(self) -> bool:
        if self.kind in ("c_star", "spectrum_infty"):
            return True
        return self.kind == "m_mean" and -1 < self.alpha < 0


# ---------------------------------------------------------------- integrator

def rk4(rhs: Callable, y0, t0: float, t1: float, steps: int, record: int = 1):
    """Classical fixed-step Runge-Kutta.

    Works on floats or numpy arrays.  Returns ``(times, states)`` sampled every
    ``record`` steps, always including both end points.
    """
    if steps < 1:
        raise DomainError(f"steps must be >= 1, got {steps}")
    h = (t1 - t0) / steps
    y = y0
    times = [t0]
    states = [y0]
    for n in range(steps):
        t = t0 + n * h
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (n + 1) % record == 0 or n + 1 == steps:
            times.append(t0 + (n + 1) * h)
            states.append(y)
    return np.array(times), states


@dataclass(frozen=True)
class _SpectrumTerm:
    coef: float
    m: int
    powers: tuple[tuple[int, int], ...] = field(default=())  # (index k-1, exponent)


@lru_cache(maxsize=32)
def _spectrum_terms(params: BetaParams, d: int) -> tuple[tuple[_SpectrumTerm, ...], ...]:
    if d > MAX_COMPOSITION_SIZE:
        raise DomainError(f"spectrum system limited to d <= {MAX_COMPOSITION_SIZE}")
    a, b = params.a, params.b
    out = []
    for i in range(1, d + 1):
        terms = []
        for m in range(2, i + 1):
            rise = math.prod(a + j for j in range(m - 2))
            if rise == 0:
                continue
            for comp in enumerate_weighted_compositions(i, m, d):
                powers = tuple((k, e) for k, e in enumerate(comp.counts) if e)
                denom = math.prod(math.factorial(e) for _, e in powers)
                terms.append(_SpectrumTerm(rise / denom, m, powers))
        out.append(tuple(terms))
    return tuple(out)


def spectrum_rhs(params: BetaParams, d: int, total: Callable[[float], float]):
    """Right-hand side of the truncated size-class system, driven by ``total(t)``.

    c_i' = Gamma(a+b)/((a-1)Gamma(b)) c_i c^(1-a)
           + Gamma(a+b)/Gamma(b) sum_{m=2}^{i} a^(rising m-2) c^(2-a-m)
             sum_{|l|=m, <l>=i} prod_k c_k^(l_k)/l_k!
    The system is triangular: c_i' involves only c_1..c_i.
    """
    a, b = params.a, params.b
    ratio = math.exp(math.lgamma(a + b) - math.lgamma(b))
    loss = ratio / (a - 1.0)
    terms = _spectrum_terms(params, d)

    def rhs(t, y):
        c = total(t)
        ca = c ** (1.0 - a)
        out = np.empty(d)
        for i in range(d):
            gain = 0.0
            for term in terms[i]:
                prod = term.coef * c ** (2.0 - a - term.m)
                for k, e in term.powers:
                    prod *= y[k] ** e
                gain += prod
            out[i] = loss * y[i] * ca + ratio * gain
        return out

    return rhs


def _bernoulli_rhs(params: BetaParams):
    g_full, _ = drift_constants(params)
    e = 2.0 - params.a
    return lambda t, y: -g_full * y ** e


def _system_for(curve: LimitCurve):
    """(rhs, value-of-state) for the ODE the curve is supposed to solve."""
    p = curve.params
    if curve.kind in ("c", "c_star", "gen_fun_g"):
        return _bernoulli_rhs(p), lambda y: y
    if curve.kind == "m_mean":
        if p.is_kingman or p.a < 1:
            return _bernoulli_rhs(p), lambda y: y
        rate = mean_decay_rate(p)
        return (lambda t, y: -rate * y), (lambda y: y)
    if curve.kind == "gen_fun_G":
        # integrate c and g together; G = c - g
        bern = _bernoulli_rhs(p)
        return (lambda t, y: bern(t, y)), (lambda y: y[0] - y[1])
    if curve.kind == "spectrum_i":
        drive = lambda t: c_limit(p, t)  # noqa: E731
    else:
        drive = lambda t: c_star_limit(p, t)  # noqa: E731
    return spectrum_rhs(p, curve.i, drive), (lambda y: y[-1])


def _initial_state(curve: LimitCurve, t0: float):
    p = curve.params
    if curve.kind == "gen_fun_G":
        return np.array([c_limit(p, t0), g_transform(p, t0, curve.x)])
    if curve.kind == "spectrum_i":
        return np.array([spectrum_limit(p, i, t0) for i in range(1, curve.i + 1)])
    if curve.kind == "spectrum_infty":
        return np.array([spectrum_limit_infty(p, i, t0) for i in range(1, curve.i + 1)])
    return curve(t0)


@dataclass(frozen=True)
class OdeCheck:
    deviation: float
    integrator_error: float

    def __float__(self) -> float:
        return self.deviation


def verify_ode_solution(
    curve: LimitCurve,
    t0: float,
    t1: float,
    steps: int,
    *,
    checkpoints: int = 201,
    step_tol: float = 1e-9,
    report: bool = False,
):
    """Max relative gap between an RK4 solution of the curve's ODE and the curve.

    The integration starts from the closed form at ``t0``.  A second run with
    half the steps estimates the integrator's own error (Richardson); if that
    estimate exceeds ``step_tol`` the comparison says nothing about the
    closed form and :class:`StepSizeError` is raised.
    """
    if not t1 > t0:
        raise DomainError(f"need t1 > t0, got [{t0}, {t1}]")
    if curve.starts_at_infinity and t0 <= 0:
        raise DomainError(f"{curve.kind} starts at infinity; integrate from t0 > 0")
    if steps < 2 or steps % 2:
        raise DomainError(f"steps must be an even integer >= 2, got {steps}")
    rhs, value = _system_for(curve)
    y0 = _initial_state(curve, t0)
    # even spacing so both runs record at the same times
    every = 2 * max(1, steps // (2 * (checkpoints - 1)))
    try:
        times, fine = rk4(rhs, y0, t0, t1, steps, record=every)
        _, coarse = rk4(rhs, y0, t0, t1, steps // 2, record=every // 2)
    except (OverflowError, ZeroDivisionError) as exc:
        raise StepSizeError(f"RK4 diverged with {steps} steps on [{t0}, {t1}]: {exc}") from None
    if any(np.iscomplexobj(y) or not np.all(np.isfinite(y)) for y in (fine[-1], coarse[-1])):
        raise StepSizeError(f"RK4 left the real domain with {steps} steps on [{t0}, {t1}]")
    dev = 0.0
    err = 0.0
    for t, yf, yc in zip(times, fine, coarse):
        exact = curve(float(t))
        vf, vc = value(yf), value(yc)
        scale = abs(exact) if exact != 0 else 1.0
        dev = max(dev, abs(vf - exact) / scale)
        # RK4: error(h) - error(h/2) = 15 error(h/2)
        err = max(err, abs(vf - vc) / 15.0 / scale)
    if err > step_tol:
        raise StepSizeError(
            f"integrator error estimate {err:.3g} exceeds {step_tol:.3g}; "
            f"deviation {dev:.3g} cannot be attributed to the closed form"
        )
    return OdeCheck(dev, err) if report else dev
