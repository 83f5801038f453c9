"""Space-time rescaling of simulated paths and convergence measurement.

A path of the n-coalescent is viewed as ``t -> n^alpha X(t tau_n)`` with
``tau_n = tau_const n^beta``.  Each ``converge_*`` experiment runs ensembles
for several n, rescales them, and records the sup-norm distance between the
ensemble mean and the matching closed-form limit on a fixed grid, together
with 95% normal confidence half-widths from the replicate variance.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import limits
from .errors import DomainError, RegimeError
from .rates import BetaParams, build_rate_table
from .sim.chains import BlockCountTrajectory, SpectrumTrajectory
from .sim.ensemble import ExperimentSpec, SeedPolicy, run_ensemble

Z_95 = 1.959963984540054
DEFAULT_GRID_POINTS = 64
# alpha in (-1, 0) grids start here: the limit has a pole at t=0
STAR_GRID_START = 0.25


# ---------------------------------------------------------------- rescaling

@dataclass(frozen=True)
class Rescaling:
    alpha: float
    beta: float
    tau_const: float = 1.0

    def __post_init__(self):
        if not self.tau_const > 0:
            raise DomainError(f"tau_const must be positive, got {self.tau_const}")

    def tau(self, n: int) -> float:
        return self.tau_const * float(n) ** self.beta

    @property
    def is_identity(self) -> bool:
        return self.alpha == 0 and self.beta == 0 and self.tau_const == 1

    def inverse(self) -> "Rescaling":
        return Rescaling(-self.alpha, -self.beta, 1.0 / self.tau_const)

    def check(self, params: BetaParams, target: str = "count") -> None:
        """Raise RegimeError unless (alpha, beta) has a limit for ``target``.

        ``target`` is ``count`` (block count, a < 1), ``mean`` (ensemble
        mean, either regime) or ``spectrum``.
        """
        if self.is_identity:
            return
        a = 0.0 if params.is_kingman else params.a
        cdi = params.is_kingman or a < 1
        al, be = self.alpha, self.beta
        if target == "spectrum":
            ok = cdi and al == -1 and math.isclose(be, a - 1.0, abs_tol=1e-12)
            need = "alpha=-1, beta=a-1 with a<1"
        elif cdi:
            ok = -1 <= al < 0 and math.isclose(be, (1.0 - a) * al, abs_tol=1e-12)
            need = "alpha in [-1,0) and beta=(1-a)alpha"
        elif target == "mean" and a > 1:
            ok = al == -1 and be == 0
            need = "alpha=-1, beta=0 for the a>1 mean"
        else:
            ok = False
            need = f"a<1 for {target} limits"
        if not ok:
            raise RegimeError(f"rescaling (alpha={al}, beta={be}) not admissible: need {need} ({params})")

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "tau_const": self.tau_const}


@dataclass(frozen=True, eq=False)
class StepFunction:
    """A rescaled right-continuous step path.

    The raw clock times and states are kept with the accumulated exponents,
    so rescaling and then undoing it returns the raw path exactly.
    """

    clock_times: np.ndarray
    raw_values: np.ndarray
    n: int
    alpha: float = 0.0
    beta: float = 0.0
    tau_const: float = 1.0

    @property
    def times(self) -> np.ndarray:
        if self.beta == 0 and self.tau_const == 1:
            return self.clock_times
        return self.clock_times / (self.tau_const * float(self.n) ** self.beta)

    @property
    def values(self) -> np.ndarray:
        if self.alpha == 0:
            return self.raw_values
        return self.raw_values * float(self.n) ** self.alpha

    def __call__(self, grid) -> np.ndarray:
        idx = np.searchsorted(self.times, np.asarray(grid, dtype=float), side="right") - 1
        if np.any(idx < 0):
            raise DomainError("grid contains times before the start of the path")
        return self.values[idx]

    def rescale(self, r: Rescaling) -> "StepFunction":
        return StepFunction(
            self.clock_times,
            self.raw_values,
            self.n,
            self.alpha + r.alpha,
            self.beta + r.beta,
            self.tau_const * r.tau_const,
        )


def rescale(traj, r: Rescaling, target: str | None = None) -> StepFunction:
    """``t -> n^alpha X(t tau_n)`` for a block-count or size-spectrum path.

    Spectrum paths carry all d+2 columns (class counts, tail count, tail mass).
    A StepFunction is rescaled further without regime checks.
    """
    if isinstance(traj, StepFunction):
        return traj.rescale(r)
    if isinstance(traj, BlockCountTrajectory):
        r.check(traj.params, target or "count")
        base = StepFunction(traj.times, traj.counts.astype(float), traj.n_start)
    elif isinstance(traj, SpectrumTrajectory):
        r.check(traj.params, target or "spectrum")
        base = StepFunction(traj.times, traj.states.astype(float), traj.n_start)
    else:
        raise DomainError(f"cannot rescale {type(traj).__name__}")
    return base.rescale(r)


# ---------------------------------------------------------------- reports

@dataclass
class ConvergenceReport:
    experiment: str
    params: dict
    rescaling: dict
    grid: list
    n_values: list = field(default_factory=list)
    sup_errors: list = field(default_factory=list)
    ci_halfwidths: list = field(default_factory=list)
    tolerance: float | None = None
    relative: bool = False
    verdicts: list = field(default_factory=list)
    # one row per (n, t[, class]): n, class, t, mean, oracle, error, ci
    rows: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def add(self, n: int, sup_error: float, ci: float) -> None:
        if sup_error < 0 or ci < 0:
            raise ValueError("errors and half-widths are non-negative")
        self.n_values.append(int(n))
        self.sup_errors.append(float(sup_error))
        self.ci_halfwidths.append(float(ci))
        self.verdicts.append(None if self.tolerance is None else bool(sup_error <= self.tolerance))

    @property
    def final_error(self) -> float:
        return self.sup_errors[-1]

    def monotone(self) -> bool:
        return errors_non_increasing(self.sup_errors, self.ci_halfwidths)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "params": self.params,
            "rescaling": self.rescaling,
            "grid": list(map(float, self.grid)),
            "n_values": self.n_values,
            "sup_errors": self.sup_errors,
            "ci_halfwidths": self.ci_halfwidths,
            "tolerance": self.tolerance,
            "relative": self.relative,
            "verdicts": self.verdicts,
            "monotone": self.monotone() if self.sup_errors else True,
            "diagnostics": self.diagnostics,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(_plain(self.to_dict()), sort_keys=True, indent=2, allow_nan=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "class", "t", "mean", "oracle", "error", "ci_halfwidth"])
        for row in self.rows:
            w.writerow([row[0], row[1]] + ["%.17g" % v for v in row[2:]])
        return buf.getvalue()


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    return obj


def errors_non_increasing(errors, cis) -> bool:
    """Each error may exceed its predecessor only by the noise of either estimate (2 CI)."""
    for k in range(1, len(errors)):
        slack = 2.0 * max(cis[k - 1], cis[k])
        if errors[k] > errors[k - 1] + slack:
            return False
    return True


# ---------------------------------------------------------------- experiments

def default_grid(t0: float, t1: float, points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    return np.linspace(t0, t1, points)


def _check_n_list(n_list) -> list[int]:
    ns = [int(n) for n in n_list]
    if not ns or any(n < 2 for n in ns):
        raise DomainError(f"n values must be >= 2, got {n_list}")
    return ns


def _ensemble(params, table, n, r: Rescaling, grid, replicates, seed, parallelism, kind="count", d=1):
    clock = np.asarray(grid, dtype=float) * r.tau(n)
    spec = ExperimentSpec(table, n, clock, kind=kind, d=d)
    return run_ensemble(spec, replicates, SeedPolicy(seed, stream=n), parallelism)


def _sup(mean, oracle, ci, relative):
    err = np.abs(mean - oracle)
    if relative:
        err = err / np.abs(oracle)
        ci = ci / np.abs(oracle)
    return err, ci


def finite_start_limit(params: BetaParams, start: float, grid) -> np.ndarray:
    """Solution of c' = -G_full c^(2-a) with c(0) = start: (start^(a-1) + K t)^(1/(a-1)).

    With start = n^(-alpha) this is what an alpha > -1 ensemble at size n
    approaches; it tends to c*(t) only as start -> infinity.
    """
    _, k = limits.drift_constants(params)
    a = 0.0 if params.is_kingman else params.a
    return (start ** (a - 1.0) + k * np.asarray(grid, dtype=float)) ** (1.0 / (a - 1.0))


def converge_block_count(
    params: BetaParams,
    alpha: float,
    n_list,
    replicates: int,
    grid,
    seed: int,
    *,
    oracle: str | None = None,
    tau_const: float = 1.0,
    tolerance: float | None = None,
    parallelism: int = 1,
) -> ConvergenceReport:
    """Rescaled block count vs c(t) (alpha=-1) or c*(t) (-1<alpha<0).

    The alpha=-1 error is absolute, the alpha>-1 error relative.  For
    alpha>-1 the report also carries the error against c(t), the limit of
    the other branch, under ``diagnostics['wrong_branch_sup_errors']``.
    """
    a = 0.0 if params.is_kingman else params.a
    r = Rescaling(alpha, (1.0 - a) * alpha, tau_const)
    r.check(params, "count")
    expected = "c" if alpha == -1 else "c_star"
    if oracle is not None and oracle != expected:
        raise RegimeError(f"alpha={alpha} has limit {expected!r}; refusing oracle {oracle!r}")
    grid = np.asarray(grid, dtype=float)
    curve = limits.LimitCurve(expected, params)
    target = curve.evaluate(grid)
    relative = expected == "c_star"
    ns = _check_n_list(n_list)
    table = build_rate_table(params, max(ns))
    rep = ConvergenceReport(
        "count", params.to_dict(), r.to_dict(), grid.tolist(), tolerance=tolerance, relative=relative,
        config=dict(replicates=replicates, seed=seed, n_list=ns),
    )
    other = limits.LimitCurve("c", params).evaluate(grid) if relative else None
    wrong, near = [], []
    for n in ns:
        st = _ensemble(params, table, n, r, grid, replicates, seed, parallelism)
        mean = st.mean * float(n) ** alpha
        ci = Z_95 * st.std_error() * float(n) ** alpha
        err, ci_s = _sup(mean, target, ci, relative)
        rep.add(n, float(err.max()), float(ci_s.max()))
        rep.rows.extend((n, "count", t, m, o, e, c) for t, m, o, e, c in zip(grid, mean, target, err, ci_s))
        if relative:
            wrong.append(float((np.abs(mean - other) / np.abs(other)).max()))
            finite = finite_start_limit(params, float(n) ** (-alpha), grid)
            near.append(float((np.abs(mean - finite) / np.abs(finite)).max()))
    if relative:
        rep.diagnostics["wrong_branch_sup_errors"] = wrong
        rep.diagnostics["finite_start_sup_errors"] = near
    return rep


def converge_mean_stays_infinite(
    params: BetaParams,
    n_list,
    replicates: int,
    grid,
    seed: int,
    *,
    tolerance: float | None = None,
    parallelism: int = 1,
) -> ConvergenceReport:
    """n^-1 E[N_n(t)] (no time change) vs exp(-(a+b-1)/(a-1) t) for a > 1.

    ``diagnostics['rate_a_plus_b_sup_errors']`` holds the distance to
    exp(-(a+b)/(a-1) t) for comparison.
    """
    if params.is_kingman or not params.a > 1 or params.a == 2:
        raise RegimeError(f"stays-infinite experiment needs a > 1, a != 2, got {params}")
    r = Rescaling(-1.0, 0.0)
    r.check(params, "mean")
    grid = np.asarray(grid, dtype=float)
    target = np.array([limits.mean_limit(params, t, -1.0) for t in grid])
    rate_ab = np.exp(-(params.a + params.b) / (params.a - 1.0) * grid)
    ns = _check_n_list(n_list)
    table = build_rate_table(params, max(ns))
    rep = ConvergenceReport(
        "mean", params.to_dict(), r.to_dict(), grid.tolist(), tolerance=tolerance,
        config=dict(replicates=replicates, seed=seed, n_list=ns),
    )
    rate_ab_err = []
    for n in ns:
        st = _ensemble(params, table, n, r, grid, replicates, seed, parallelism)
        mean = st.mean / n
        ci = Z_95 * st.std_error() / n
        err = np.abs(mean - target)
        rep.add(n, float(err.max()), float(ci.max()))
        rep.rows.extend((n, "mean", t, m, o, e, c) for t, m, o, e, c in zip(grid, mean, target, err, ci))
        rate_ab_err.append(float(np.abs(mean - rate_ab).max()))
    rep.diagnostics["rate_a_plus_b_sup_errors"] = rate_ab_err
    return rep


def converge_spectrum(
    params: BetaParams,
    d: int,
    n_list,
    replicates: int,
    grid,
    seed: int,
    *,
    x: float = 0.5,
    tau_const: float = 1.0,
    tolerance: float | None = None,
    parallelism: int = 1,
) -> ConvergenceReport:
    """n^-1 E[type_i] at clock time t n^(a-1) vs c_i(t), for i <= d and the tail.

    The reported sup error is the worst over classes 1..d; the tail count
    (oracle c - sum c_i) and the truncated generating function at ``x`` are
    reported per n in the diagnostics.
    """
    a = 0.0 if params.is_kingman else params.a
    r = Rescaling(-1.0, a - 1.0, tau_const)
    r.check(params, "spectrum")
    grid = np.asarray(grid, dtype=float)
    oracle = np.array([[limits.spectrum_limit(params, i, t) for i in range(1, d + 1)] for t in grid])
    c_vals = limits.LimitCurve("c", params).evaluate(grid)
    tail_oracle = c_vals - oracle.sum(axis=1)
    weights = x ** np.arange(1, d + 1)
    gf_oracle = np.array([limits.gen_fun(params, t, x) for t in grid])
    ns = _check_n_list(n_list)
    table = build_rate_table(params, max(ns))
    rep = ConvergenceReport(
        "spectrum", params.to_dict(), r.to_dict(), grid.tolist(), tolerance=tolerance,
        config=dict(replicates=replicates, seed=seed, n_list=ns, d=d, x=x),
    )
    per_class, tail_err, gf_err, gf_bound = [], [], [], []
    for n in ns:
        st = _ensemble(params, table, n, r, grid, replicates, seed, parallelism, kind="spectrum", d=d)
        mean = st.mean_types / n
        ci = Z_95 * np.sqrt(st.var_types / replicates) / n
        err = np.abs(mean - oracle)
        worst = err.max(axis=0)
        rep.add(n, float(worst.max()), float(ci.max()))
        per_class.append(worst.tolist())
        for j in range(d):
            rep.rows.extend(
                (n, f"type_{j + 1}", t, m, o, e, c)
                for t, m, o, e, c in zip(grid, mean[:, j], oracle[:, j], err[:, j], ci[:, j])
            )
        tail = st.mean_tail_count / n
        tail_err.append(float(np.abs(tail - tail_oracle).max()))
        gf_err.append(float(np.abs(mean @ weights - gf_oracle).max()))
        # blocks above size d contribute at most x^(d+1) each
        gf_bound.append(float((tail * x ** (d + 1)).max()))
    rep.diagnostics.update(
        per_class_sup_errors=per_class,
        tail_sup_errors=tail_err,
        gen_fun_sup_errors=gf_err,
        gen_fun_truncation_bounds=gf_bound,
    )
    return rep
