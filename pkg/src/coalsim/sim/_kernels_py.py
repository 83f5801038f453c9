"""Pure-Python Gillespie kernels.

Reference implementation of the uniform-stream protocol shared with the
compiled kernels: uniforms come from ``rng.random(UNIFORM_BATCH)`` buffers,
one uniform per holding time, one per merger size, and for the size chain
one per selected block.  Every floating-point expression is evaluated in the
same order as in ``_ckernels.pyx`` so both backends give identical paths.
"""
import math

import numpy as np

UNIFORM_BATCH = 4096


class _Uniforms:
    __slots__ = ("rng", "buf", "pos")

    def __init__(self, rng):
        self.rng = rng
        self.buf = rng.random(UNIFORM_BATCH).tolist()
        self.pos = 0

    def next(self):
        if self.pos == UNIFORM_BATCH:
            self.buf = self.rng.random(UNIFORM_BATCH).tolist()
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return u


def _merger_size(u, m, p2, a, b):
    p = p2
    cum = p
    l = 2
    while u >= cum and l < m:
        p = p * ((m - l) * (a + l - 2.0)) / ((l + 1) * (b + m - l - 1.0))
        l += 1
        cum += p
    return l


def block_count_path(row_totals, pair_prob, a, b, n_start, t_max, rng):
    """Event times and block counts of one run, starting with (0, n_start)."""
    totals = row_totals.tolist()
    pairs = pair_prob.tolist()
    us = _Uniforms(rng)
    times = [0.0]
    counts = [n_start]
    t = 0.0
    m = n_start
    while m > 1:
        u = us.next()
        t += -math.log(1.0 - u) / totals[m]
        if t > t_max:
            break
        l = _merger_size(us.next(), m, pairs[m], a, b)
        m = m - l + 1
        times.append(t)
        counts.append(m)
    return np.array(times, dtype=np.float64), np.array(counts, dtype=np.int64)


def spectrum_path(row_totals, pair_prob, a, b, initial_sizes, d, t_max, rng):
    """One run of the size chain.

    Returns event times, an (events, d+2) array holding the counts of blocks
    of size 1..d, the number of larger blocks and their total mass, and the
    block sizes at the end of the run.
    """
    totals = row_totals.tolist()
    pairs = pair_prob.tolist()
    us = _Uniforms(rng)
    sizes = [int(s) for s in initial_sizes]
    m = len(sizes)
    mass = sum(sizes)
    hist = [0] * (mass + 1)
    for s in sizes:
        hist[s] += 1

    def snapshot():
        row = hist[1 : d + 1] + [0] * max(0, d - mass)
        row = row[:d]
        small = sum(row)
        small_mass = sum((k + 1) * c for k, c in enumerate(row))
        return row + [m - small, mass - small_mass]

    times = [0.0]
    rows = [snapshot()]
    t = 0.0
    while m > 1:
        u = us.next()
        t += -math.log(1.0 - u) / totals[m]
        if t > t_max:
            break
        l = _merger_size(us.next(), m, pairs[m], a, b)
        merged = 0
        for j in range(l):
            r = int(us.next() * (m - j))
            last = m - 1 - j
            sizes[r], sizes[last] = sizes[last], sizes[r]
            s = sizes[last]
            hist[s] -= 1
            merged += s
        m = m - l + 1
        sizes[m - 1] = merged
        hist[merged] += 1
        times.append(t)
        rows.append(snapshot())
    return (
        np.array(times, dtype=np.float64),
        np.array(rows, dtype=np.int64).reshape(len(rows), d + 2),
        np.array(sizes[:m], dtype=np.int64),
    )
