"""Deterministic CSV and JSON serialisation.

CSV: ``,`` separator, ``\\n`` line ends, floats as ``%.17g``.  JSON: sorted
keys, two-space indent, floats via ``repr`` (shortest exact round trip).
"""
from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .harness import ConvergenceReport
from .rates import RateTable
from .sim.chains import BlockCountTrajectory, SpectrumTrajectory

FORMATS = ("csv", "json")


def fmt_float(x) -> str:
    return "%.17g" % float(x)


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)


def csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue().encode()


def plain(obj):
    """Convert numpy scalars/arrays and tuples into JSON-ready builtins."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def json_bytes(obj) -> bytes:
    return (json.dumps(plain(obj), sort_keys=True, indent=2) + "\n").encode()


def ensemble_table(stats, grid=None, scale: float = 1.0):
    """Header and rows of the ensemble CSV: t, mean_count, var_count[, mean_type_i..., mean_tail]."""
    grid = stats.grid if grid is None else grid
    header = ["t", "mean_count", "var_count"]
    cols = [stats.mean * scale, stats.var * scale * scale]
    if stats.mean_types is not None:
        d = stats.mean_types.shape[1]
        header += [f"mean_type_{i}" for i in range(1, d + 1)] + ["mean_tail"]
        cols += [stats.mean_types[:, j] * scale for j in range(d)] + [stats.mean_tail_count * scale]
    rows = [[grid[k]] + [c[k] for c in cols] for k in range(len(grid))]
    return header, rows


def emit(obj, fmt: str = "csv") -> bytes:
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    if isinstance(obj, ConvergenceReport):
        return obj.to_json().encode() if fmt == "json" else obj.to_csv().encode()
    if isinstance(obj, BlockCountTrajectory):
        header = ["t", "block_count"]
        rows = list(zip(obj.times.tolist(), obj.counts.tolist()))
        if fmt == "json":
            return json_bytes({"params": obj.params.to_dict(), "n_start": obj.n_start, "events": rows})
        return csv_bytes(header, rows)
    if isinstance(obj, SpectrumTrajectory):
        header = ["t"] + [f"type_{i}" for i in range(1, obj.d + 1)] + ["tail_count", "tail_mass"]
        rows = [[t] + s for t, s in zip(obj.times.tolist(), obj.states.tolist())]
        if fmt == "json":
            return json_bytes({"params": obj.params.to_dict(), "n_start": obj.n_start, "d": obj.d,
                               "columns": header, "events": rows})
        return csv_bytes(header, rows)
    if isinstance(obj, RateTable):
        return emit_rates(obj, None, fmt)
    if hasattr(obj, "mean") and hasattr(obj, "grid"):
        header, rows = ensemble_table(obj)
        if fmt == "json":
            return json_bytes({"columns": header, "rows": rows})
        return csv_bytes(header, rows)
    if fmt == "json":
        return json_bytes(obj)
    raise TypeError(f"no CSV form for {type(obj).__name__}")


def rate_rows(table: RateTable, row: int | None = None):
    """(m, k, log_lambda, lambda) for one row or every row; lambda is None when it underflows."""
    ms = [row] if row is not None else range(2, table.n_max + 1)
    for m in ms:
        for k, lg in enumerate(table.log_row(m).tolist(), start=2):
            val = math.exp(lg)
            yield m, k, lg, (val if val > 0 else None)


def emit_rates(table: RateTable, row: int | None = None, fmt: str = "csv") -> bytes:
    header = ["m", "k", "log_lambda", "lambda"]
    rows = [[m, k, lg, "" if v is None else v] for m, k, lg, v in rate_rows(table, row)]
    if fmt == "json":
        ms = [row] if row is not None else list(range(2, table.n_max + 1))
        return json_bytes({
            "params": table.params.to_dict(),
            "n_max": table.n_max,
            "columns": header,
            "rows": [[m, k, lg, v] for m, k, lg, v in rate_rows(table, row)],
            "row_totals": {str(m): float(table.row_totals[m]) for m in ms},
            "pair_prob": {str(m): float(table.pair_prob[m]) for m in ms},
        })
    return csv_bytes(header, rows)
