"""Single-run simulators and their trajectory types."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..bell import SetPartition
from ..errors import BudgetError, DomainError
from ..rates import BetaParams, RateTable
from . import _backend
from ._kernels_py import _merger_size, _Uniforms

MAX_LABELLED = 12


def as_generator(seed) -> np.random.Generator:
    """Accept an int, a SeedSequence or a ready Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    if isinstance(seed, (int, np.integer)) and seed >= 0:
        return np.random.Generator(np.random.PCG64(int(seed)))
    raise DomainError(f"seed must be a non-negative int, SeedSequence or Generator, got {seed!r}")


def _step_values(times: np.ndarray, values: np.ndarray, grid) -> np.ndarray:
    # right-continuous step path: value at the last event time <= t
    idx = np.searchsorted(times, np.asarray(grid, dtype=float), side="right") - 1
    if np.any(idx < 0):
        raise DomainError("grid contains times before the start of the path")
    return values[idx]


@dataclass(frozen=True, eq=False)
class BlockCountTrajectory:
    params: BetaParams
    n_start: int
    times: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)

    @property
    def events(self) -> list[tuple[float, int]]:
        return list(zip(self.times.tolist(), self.counts.tolist()))

    @property
    def absorbed(self) -> bool:
        return int(self.counts[-1]) == 1

    @property
    def absorption_time(self) -> float:
        return float(self.times[-1]) if self.absorbed else math.inf

    def value_at(self, grid) -> np.ndarray:
        return _step_values(self.times, self.counts, grid)


@dataclass(frozen=True, eq=False)
class SpectrumTrajectory:
    """Counts of blocks of size 1..d, the number of larger blocks and their mass."""

    params: BetaParams
    n_start: int
    d: int
    times: np.ndarray = field(repr=False)
    states: np.ndarray = field(repr=False)
    final_sizes: np.ndarray = field(repr=False)

    @property
    def type_counts(self) -> np.ndarray:
        return self.states[:, : self.d]

    @property
    def tail_counts(self) -> np.ndarray:
        return self.states[:, self.d]

    @property
    def tail_mass(self) -> np.ndarray:
        return self.states[:, self.d + 1]

    @property
    def block_counts(self) -> np.ndarray:
        return self.type_counts.sum(axis=1) + self.tail_counts

    @property
    def events(self) -> list[tuple[float, tuple[int, ...]]]:
        return [(t, tuple(row[: self.d + 1])) for t, row in zip(self.times.tolist(), self.states.tolist())]

    def mass_at_events(self) -> np.ndarray:
        sizes = np.arange(1, self.d + 1)
        return self.type_counts @ sizes + self.tail_mass

    def mass_conserved(self) -> bool:
        return bool(np.all(self.mass_at_events() == self.n_start))

    @property
    def absorption_time(self) -> float:
        return float(self.times[-1]) if int(self.block_counts[-1]) == 1 else math.inf

    def value_at(self, grid) -> np.ndarray:
        """(len(grid), d+2) states on a time grid."""
        return _step_values(self.times, self.states, grid)


@dataclass(frozen=True, eq=False)
class LabelledPartitionTrajectory:
    ground_size: int
    times: tuple[float, ...]
    partitions: tuple[SetPartition, ...]

    @property
    def events(self) -> list[tuple[float, SetPartition]]:
        return list(zip(self.times, self.partitions))

    def block_count_at(self, t: float) -> int:
        idx = int(np.searchsorted(np.asarray(self.times), t, side="right")) - 1
        return len(self.partitions[idx])


def _check_start(table: RateTable, n_start: int) -> None:
    if not (2 <= n_start <= table.n_max):
        raise DomainError(f"n_start={n_start} outside 2..{table.n_max}")


def _t_max(t_max) -> float:
    if t_max is None:
        return math.inf
    if not t_max >= 0:
        raise DomainError(f"t_max must be >= 0, got {t_max!r}")
    return float(t_max)


def simulate_block_count(table: RateTable, n_start: int, t_max=None, seed=0, *, backend=None) -> BlockCountTrajectory:
    """Run the block-counting chain from ``n_start`` until absorption or ``t_max``."""
    _check_start(table, n_start)
    kern = _backend.load(backend) if backend else _backend.kernels
    totals, pairs, a, b = table.kernel_arrays()
    times, counts = kern.block_count_path(totals, pairs, a, b, int(n_start), _t_max(t_max), as_generator(seed))
    return BlockCountTrajectory(table.params, n_start, times, counts)


def simulate_spectrum(
    table: RateTable,
    n_start: int | None = None,
    d: int = 1,
    t_max=None,
    seed=0,
    *,
    initial_sizes=None,
    backend=None,
) -> SpectrumTrajectory:
    """Run the size chain from ``n_start`` singletons or from ``initial_sizes``."""
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    if initial_sizes is None:
        if n_start is None:
            raise DomainError("give n_start or initial_sizes")
        _check_start(table, n_start)
        sizes = np.ones(n_start, dtype=np.int64)
    else:
        sizes = np.asarray(initial_sizes, dtype=np.int64)
        if sizes.ndim != 1 or np.any(sizes < 1):
            raise DomainError("initial_sizes must be a 1-d array of positive integers")
        if len(sizes) > table.n_max:
            raise DomainError(f"{len(sizes)} initial blocks exceed table size {table.n_max}")
    mass = int(sizes.sum())
    kern = _backend.load(backend) if backend else _backend.kernels
    totals, pairs, a, b = table.kernel_arrays()
    times, states, final = kern.spectrum_path(totals, pairs, a, b, sizes, int(d), _t_max(t_max), as_generator(seed))
    return SpectrumTrajectory(table.params, mass, d, times, states, final)


def simulate_labelled(table: RateTable, n: int, seed=0, t_max=None) -> LabelledPartitionTrajectory:
    """Partition-valued chain on {1..n}; the merging blocks are a uniform k-subset."""
    if n > MAX_LABELLED:
        raise BudgetError(f"labelled simulation is limited to n <= {MAX_LABELLED}, got {n}")
    _check_start(table, n)
    t_stop = _t_max(t_max)
    totals, pairs, a, b = table.kernel_arrays()
    totals, pairs = totals.tolist(), pairs.tolist()
    us = _Uniforms(as_generator(seed))
    blocks = [(i,) for i in range(1, n + 1)]
    times = [0.0]
    parts = [SetPartition.from_blocks(blocks)]
    t = 0.0
    while len(blocks) > 1:
        m = len(blocks)
        t += -math.log(1.0 - us.next()) / totals[m]
        if t > t_stop:
            break
        k = _merger_size(us.next(), m, pairs[m], a, b)
        for j in range(k):
            r = int(us.next() * (m - j))
            last = m - 1 - j
            blocks[r], blocks[last] = blocks[last], blocks[r]
        merged = tuple(sorted(x for blk in blocks[m - k :] for x in blk))
        blocks = blocks[: m - k] + [merged]
        times.append(t)
        parts.append(SetPartition.from_blocks(blocks))
    return LabelledPartitionTrajectory(n, tuple(times), tuple(parts))


def restrict_partition(part: SetPartition, n: int) -> SetPartition:
    kept = [tuple(x for x in blk if x <= n) for blk in part.blocks]
    return SetPartition.from_blocks([blk for blk in kept if blk])


def restrict(traj: LabelledPartitionTrajectory, n: int) -> LabelledPartitionTrajectory:
    """Restrict every state to {1..n}, dropping jumps that become invisible."""
    if not (1 <= n <= traj.ground_size):
        raise DomainError(f"cannot restrict a size-{traj.ground_size} trajectory to {n}")
    times: list[float] = []
    parts: list[SetPartition] = []
    for t, p in traj.events:
        q = restrict_partition(p, n)
        if parts and parts[-1] == q:
            continue
        times.append(t)
        parts.append(q)
    return LabelledPartitionTrajectory(n, tuple(times), tuple(parts))
