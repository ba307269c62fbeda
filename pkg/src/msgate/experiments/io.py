"""Output files: CSV time series, jump logs, summaries and gnuplot scripts."""

from __future__ import annotations

import math
import os

import numpy as np

from ..fockspace import INTERNAL_LABELS

SCHEMA_VERSION = 1
_FMT = "%.12e"


def rho_columns() -> list[str]:
    cols = []
    for a in INTERNAL_LABELS:
        for b in INTERNAL_LABELS:
            cols += [f"rho_{a}{b}_re", f"rho_{a}{b}_im"]
    return cols


def timeseries_header(si: bool = False) -> list[str]:
    return ["t"] + (["t_seconds"] if si else []) + rho_columns() + ["norm_drift", "mean_n"]


def column_index(name: str, si: bool = False) -> int:
    """1-based column number (gnuplot convention)."""
    return timeseries_header(si).index(name) + 1


def write_timeseries(path, times, rhos, norm_drift, mean_n, nu_hz: float | None = None):
    """Write ``timeseries.csv``; the first line is ``# schema=1``."""
    times = np.asarray(times, dtype=np.float64)
    rhos = np.asarray(rhos)
    cols = [times[:, None]]
    if nu_hz is not None:
        cols.append((times / (2.0 * math.pi * nu_hz))[:, None])
    flat = rhos.reshape(times.size, 16)
    parts = np.empty((times.size, 32))
    parts[:, 0::2] = flat.real
    parts[:, 1::2] = flat.imag
    cols += [parts, np.broadcast_to(np.asarray(norm_drift, dtype=np.float64), times.shape)[:, None],
             np.asarray(mean_n, dtype=np.float64)[:, None]]
    data = np.hstack(cols)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# schema={SCHEMA_VERSION}\n")
        fh.write(",".join(timeseries_header(nu_hz is not None)) + "\n")
        np.savetxt(fh, data, delimiter=",", fmt=_FMT)


def read_timeseries(path):
    """Return ``(header, data)`` from a file written by :func:`write_timeseries`."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
        if first != f"# schema={SCHEMA_VERSION}":
            raise ValueError(f"unsupported schema line {first!r}")
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, data


def write_jumps(path, records):
    """``t, operator_id, trajectory``; operator 1 is ``a``, 2 is ``a^dag``."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# schema={SCHEMA_VERSION}\n")
        fh.write("t,operator_id,trajectory\n")
        for i, rec in enumerate(records):
            for t, op in rec.jump_times:
                fh.write(f"{t:.12e},{op},{i}\n")


def write_summary(path, items: dict):
    """``key: value`` lines, in insertion order."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for k, v in items.items():
            if isinstance(v, float):
                v = f"{v:.6g}"
            fh.write(f"{k}: {v}\n")


def write_plot(path, title: str, series: list[tuple[str, str]], csv: str = "timeseries.csv",
               si: bool = False, extra_csv: str | None = None):
    """gnuplot script; ``series`` is a list of ``(column expression, legend)``.

    A column expression is either a column name or ``abs:<re>,<im>`` for
    the modulus of a complex element.
    """
    def expr(spec):
        if spec.startswith("abs:"):
            re_, im_ = spec[4:].split(",")
            i, j = column_index(re_, si), column_index(im_, si)
            return f"(sqrt(${i}**2 + ${j}**2))"
        return f"{column_index(spec, si)}"

    lines = [
        "# gnuplot script; run with: gnuplot -p plot.gp",
        "set datafile separator ','",
        "set datafile commentschars '#'",
        f"set title '{title}'",
        "set xlabel 't [1/nu]'",
        "set ylabel 'density-matrix element'",
        "set key outside right",
        "set yrange [-0.6:1.05]",
    ]
    plots = [f"'{csv}' skip 1 using 1:{expr(s)} with lines title '{lab}'" for s, lab in series]
    if extra_csv:
        plots += [f"'{extra_csv}' skip 1 using 1:{expr(s)} with lines dt 2 title '{lab} (gamma=0)'"
                  for s, lab in series]
    lines.append("plot " + ", \\\n     ".join(plots))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f"output directory {path!r} is not writable")
    return path
