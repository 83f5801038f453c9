"""Replicated runs with scheduling-independent statistics.

Replicate ``r`` draws from a PCG64 stream seeded by
``SeedSequence(entropy=master_seed, spawn_key=(stream, r))``, so its path
depends only on ``(master_seed, stream, r)``; experiments over several n use
n as the stream.  Per-replicate grid values are gathered into
an array ordered by replicate index before any reduction, which makes every
statistic bit-identical across worker counts.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError
from ..rates import RateTable
from . import _backend
from .chains import simulate_block_count, simulate_spectrum

QUANTILE_LEVELS = (0.05, 0.5, 0.95)


@dataclass(frozen=True)
class SeedPolicy:
    master_seed: int
    stream: int = 0
    rule: str = "numpy SeedSequence(entropy=master_seed, spawn_key=(stream, replicate)) -> PCG64"

    def __post_init__(self):
        if not (0 <= int(self.master_seed) < 2**64):
            raise DomainError(f"master seed must be a 64-bit unsigned integer, got {self.master_seed}")

    def sequence(self, replicate: int) -> np.random.SeedSequence:
        return np.random.SeedSequence(entropy=int(self.master_seed), spawn_key=(int(self.stream), int(replicate)))

    def generator(self, replicate: int) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.sequence(replicate)))

    def to_dict(self) -> dict:
        return {"master_seed": int(self.master_seed), "stream": int(self.stream), "rule": self.rule}


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    """What one replicate runs: a chain kind, its table and a clock-time grid."""

    table: RateTable
    n_start: int
    grid: np.ndarray
    kind: str = "count"
    d: int = 1
    t_max: float | None = None

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise DomainError("the time grid must be a non-empty 1-d sequence")
        if np.any(np.diff(grid) < 0) or grid[0] < 0:
            raise DomainError("the time grid must be non-negative and non-decreasing")
        if self.kind not in ("count", "spectrum"):
            raise DomainError(f"unknown experiment kind {self.kind!r}")
        object.__setattr__(self, "grid", grid)

    @property
    def horizon(self) -> float:
        return float(self.grid[-1]) if self.t_max is None else float(self.t_max)


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    grid: np.ndarray
    replicates: int
    mean: np.ndarray
    var: np.ndarray
    quantiles: dict = field(default_factory=dict)
    mean_types: np.ndarray | None = None
    var_types: np.ndarray | None = None
    mean_tail_count: np.ndarray | None = None
    mean_tail_mass: np.ndarray | None = None
    var_tail_mass: np.ndarray | None = None
    absorption_times: np.ndarray | None = None

    def std_error(self) -> np.ndarray:
        return np.sqrt(self.var / self.replicates)


def _run_one(spec: ExperimentSpec, gen: np.random.Generator, backend: str):
    if spec.kind == "count":
        traj = simulate_block_count(spec.table, spec.n_start, spec.horizon, gen, backend=backend)
        return traj.value_at(spec.grid).astype(float), traj.absorption_time
    traj = simulate_spectrum(spec.table, spec.n_start, spec.d, spec.horizon, gen, backend=backend)
    return traj.value_at(spec.grid).astype(float), traj.absorption_time


def _run_chunk(spec: ExperimentSpec, policy: SeedPolicy, indices: list[int], backend: str):
    values = []
    absorb = []
    for r in indices:
        v, a = _run_one(spec, policy.generator(r), backend)
        values.append(v)
        absorb.append(a)
    return np.stack(values), np.array(absorb)


def _chunks(replicates: int, parts: int) -> list[list[int]]:
    size = math.ceil(replicates / parts)
    return [list(range(s, min(s + size, replicates))) for s in range(0, replicates, size)]


def _variance(x: np.ndarray) -> np.ndarray:
    if x.shape[0] < 2:
        return np.zeros(x.shape[1:])
    return x.var(axis=0, ddof=1)


def run_ensemble(spec: ExperimentSpec, replicates: int, seed_policy: SeedPolicy, parallelism: int = 1, *, backend=None) -> EnsembleStats:
    if replicates < 1:
        raise DomainError(f"replicates must be >= 1, got {replicates}")
    if parallelism < 1:
        raise DomainError(f"parallelism must be >= 1, got {parallelism}")
    backend = backend or _backend.BACKEND
    if parallelism == 1:
        values, absorb = _run_chunk(spec, seed_policy, list(range(replicates)), backend)
    else:
        # several chunks per worker keeps the load even
        chunks = _chunks(replicates, 4 * parallelism)
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            futures = [pool.submit(_run_chunk, spec, seed_policy, c, backend) for c in chunks]
            parts = [f.result() for f in futures]
        values = np.concatenate([p[0] for p in parts])
        absorb = np.concatenate([p[1] for p in parts])

    if spec.kind == "count":
        counts = values
        extra = {}
    else:
        d = spec.d
        counts = values[:, :, :d].sum(axis=2) + values[:, :, d]
        extra = dict(
            mean_types=values[:, :, :d].mean(axis=0),
            var_types=_variance(values[:, :, :d]),
            mean_tail_count=values[:, :, d].mean(axis=0),
            mean_tail_mass=values[:, :, d + 1].mean(axis=0),
            var_tail_mass=_variance(values[:, :, d + 1]),
        )
    q = np.quantile(counts, QUANTILE_LEVELS, axis=0)
    return EnsembleStats(
        grid=spec.grid,
        replicates=replicates,
        mean=counts.mean(axis=0),
        var=_variance(counts),
        quantiles={lvl: q[j] for j, lvl in enumerate(QUANTILE_LEVELS)},
        absorption_times=absorb,
        **extra,
    )
