"""Compare the compiled and pure-Python simulation kernels.

    python3 benchmarks/bench_kernels.py [--repeats 5] [--json out.json]

Both backends consume the same uniform stream, so each timing pair also
checks that the two produce identical paths.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from coalsim.rates import BetaParams, build_rate_table
from coalsim.sim import _backend
from coalsim.sim.chains import simulate_block_count, simulate_spectrum

CASES = [
    ("count", BetaParams(0.5, 0.5), 10_000, None),
    ("count", BetaParams(1.5, 1.0), 10_000, 1.0),
    ("count", BetaParams.kingman(), 10_000, None),
    ("spectrum", BetaParams(0.5, 0.5), 2_000, None),
]


def _run(kind, table, n, t_max, backend, seed):
    if kind == "count":
        return simulate_block_count(table, n, t_max, seed, backend=backend)
    return simulate_spectrum(table, n, 5, t_max, seed, backend=backend)


def _best_time(kind, table, n, t_max, backend, repeats):
    best = float("inf")
    for r in range(repeats):
        t0 = time.perf_counter()
        _run(kind, table, n, t_max, backend, r)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--json", default=None, help="write results here")
    args = ap.parse_args(argv)

    backends = _backend.available()
    if "c" not in backends:
        print("compiled backend not built; run `python3 setup.py build_ext --inplace`", file=sys.stderr)
    rows = []
    print(f"{'kind':9s} {'params':16s} {'n':>6s} " + " ".join(f"{b + ' [s]':>11s}" for b in backends) + "  speedup  identical")
    for kind, params, n, t_max in CASES:
        table = build_rate_table(params, n)
        times = {b: _best_time(kind, table, n, t_max, b, args.repeats) for b in backends}
        paths = [_run(kind, table, n, t_max, b, 12345) for b in backends]
        same = all(np.array_equal(paths[0].times, p.times) for p in paths[1:])
        speedup = times["python"] / times["c"] if "c" in times else 1.0
        rows.append(dict(kind=kind, params=str(params), n=n, times=times, speedup=speedup, identical=same))
        print(f"{kind:9s} {str(params):16s} {n:6d} " + " ".join(f"{times[b]:11.4f}" for b in backends) + f"  {speedup:7.1f}  {same}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
