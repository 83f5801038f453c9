# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Gillespie kernels; same protocol and arithmetic as _kernels_py."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log

cnp.import_array()

cdef enum:
    UNIFORM_BATCH = 4096


cdef class _Uniforms:
    cdef object rng
    cdef object arr
    cdef double[::1] buf
    cdef Py_ssize_t pos

    def __cinit__(self, rng):
        self.rng = rng
        self.arr = rng.random(UNIFORM_BATCH)
        self.buf = self.arr
        self.pos = 0

    cdef inline double next(self):
        cdef double u
        if self.pos == UNIFORM_BATCH:
            self.arr = self.rng.random(UNIFORM_BATCH)
            self.buf = self.arr
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return u


cdef inline long _merger_size(double u, long m, double p2, double a, double b) noexcept:
    cdef double p = p2
    cdef double cum = p
    cdef long l = 2
    while u >= cum and l < m:
        p = p * (<double>(m - l) * (a + l - 2.0)) / (<double>(l + 1) * (b + m - l - 1.0))
        l += 1
        cum += p
    return l


def block_count_path(const double[::1] row_totals, const double[::1] pair_prob, double a, double b,
                     long n_start, double t_max, rng):
    cdef _Uniforms us = _Uniforms(rng)
    times_arr = np.empty(n_start, dtype=np.float64)
    counts_arr = np.empty(n_start, dtype=np.int64)
    cdef double[::1] times = times_arr
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef Py_ssize_t k = 0
    cdef double t = 0.0, u
    cdef long m = n_start, l
    times[0] = 0.0
    counts[0] = n_start
    while m > 1:
        u = us.next()
        t += -log(1.0 - u) / row_totals[m]
        if t > t_max:
            break
        l = _merger_size(us.next(), m, pair_prob[m], a, b)
        m = m - l + 1
        k += 1
        times[k] = t
        counts[k] = m
    return times_arr[: k + 1].copy(), counts_arr[: k + 1].copy()


def spectrum_path(const double[::1] row_totals, const double[::1] pair_prob, double a, double b,
                  initial_sizes, long d, double t_max, rng):
    cdef _Uniforms us = _Uniforms(rng)
    sizes_arr = np.array(initial_sizes, dtype=np.int64)
    cdef cnp.int64_t[::1] sizes = sizes_arr
    cdef long m = sizes.shape[0]
    cdef long mass = 0
    cdef Py_ssize_t j, r, last, k = 0
    for j in range(m):
        mass += sizes[j]
    hist_arr = np.zeros(mass + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] hist = hist_arr
    for j in range(m):
        hist[sizes[j]] += 1
    times_arr = np.empty(m, dtype=np.float64)
    rows_arr = np.zeros((m, d + 2), dtype=np.int64)
    cdef double[::1] times = times_arr
    cdef cnp.int64_t[:, ::1] rows = rows_arr
    cdef double t = 0.0, u
    cdef long l, s, merged
    times[0] = 0.0
    _snapshot(rows, 0, hist, d, m, mass)
    while m > 1:
        u = us.next()
        t += -log(1.0 - u) / row_totals[m]
        if t > t_max:
            break
        l = _merger_size(us.next(), m, pair_prob[m], a, b)
        merged = 0
        for j in range(l):
            r = <Py_ssize_t>(us.next() * (m - j))
            last = m - 1 - j
            s = sizes[r]
            sizes[r] = sizes[last]
            sizes[last] = s
            hist[s] -= 1
            merged += s
        m = m - l + 1
        sizes[m - 1] = merged
        hist[merged] += 1
        k += 1
        times[k] = t
        _snapshot(rows, k, hist, d, m, mass)
    return times_arr[: k + 1].copy(), rows_arr[: k + 1].copy(), sizes_arr[:m].copy()


cdef inline void _snapshot(cnp.int64_t[:, ::1] rows, Py_ssize_t k, cnp.int64_t[::1] hist,
                           long d, long m, long mass) noexcept:
    cdef long i, small = 0, small_mass = 0, c
    for i in range(1, d + 1):
        c = hist[i] if i <= mass else 0
        rows[k, i - 1] = c
        small += c
        small_mass += i * c
    rows[k, d] = m - small
    rows[k, d + 1] = mass - small_mass
