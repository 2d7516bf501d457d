"""Deterministic JSON / CSV / .dat emission (12 significant digits, sorted keys)."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, is_dataclass

import numpy as np

FLOAT_FMT = "{:.12g}"


def clean(obj):
    """Recursively convert to JSON-safe builtins, rounding floats to 12 significant digits.

    Non-finite floats become the strings "nan", "inf" and "-inf".
    """
    if is_dataclass(obj) and not isinstance(obj, type):
        return clean(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(FLOAT_FMT.format(x))
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT.format(float(v))
    return v


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])


def write_dat(path, rows, comment=None):
    """Two-column whitespace-separated plot data."""
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for row in rows:
            fh.write(" ".join(FLOAT_FMT.format(float(v)) for v in row) + "\n")


def write_gnuplot(path, dat_files, xlabel, ylabel, title=""):
    """A gnuplot script plotting each .dat file (first column against second)."""
    lines = ["set terminal pngcairo size 800,600", f"set output '{os.path.splitext(os.path.basename(path))[0]}.png'",
             f"set xlabel '{xlabel}'", f"set ylabel '{ylabel}'"]
    if title:
        lines.append(f"set title '{title}'")
    plots = [f"'{os.path.basename(f)}' using 1:2 with linespoints title '{os.path.splitext(os.path.basename(f))[0]}'"
             for f in dat_files]
    lines.append("plot " + ", \\\n     ".join(plots))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
