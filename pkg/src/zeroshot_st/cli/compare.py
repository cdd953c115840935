"""Side-by-side metric tables with deltas against a baseline run."""
from __future__ import annotations

import os

from ..errors import ArgumentError
from ..evaluation.report import MetricsReport
from .runner import METRICS


def load_run(run_dir):
    path = os.path.join(run_dir, METRICS)
    if not os.path.exists(path):
        raise ArgumentError(f"no {METRICS} in run directory {run_dir!r}")
    return MetricsReport.load(path).as_dict()


def format_delta(delta):
    return f"{delta:+.1f}"


def compare_report(run_dirs, baseline=None, names=None):
    """Rows of ``{"run", metric: value, metric + " delta": delta}`` and an aligned table.

    ``baseline`` is one of ``run_dirs`` (or its name); without it only absolute
    values are shown.
    """
    if not run_dirs:
        raise ArgumentError("compare needs at least one run directory")
    names = list(names) if names else [os.path.basename(os.path.normpath(d)) for d in run_dirs]
    metrics = {name: load_run(d) for name, d in zip(names, run_dirs)}
    base = None
    if baseline is not None:
        for name, d in zip(names, run_dirs):
            if baseline in (name, d, os.path.normpath(d)):
                base = metrics[name]
        if base is None:
            raise ArgumentError(f"baseline {baseline!r} is not among the compared runs")
    columns = []
    for values in metrics.values():
        columns += [k for k in values if k not in columns]
    rows, cells = [], []
    for name in names:
        row, line = {"run": name}, [name]
        for col in columns:
            value = metrics[name].get(col)
            row[col] = value
            if value is None:
                line.append("-")
                continue
            text = f"{value:.1f}"
            if base is not None and col in base:
                delta = round(value - base[col], 6)
                row[col + " delta"] = delta
                text += f" ({format_delta(delta)})"
            line.append(text)
        rows.append(row)
        cells.append(line)
    header = ["run"] + columns
    widths = [max(len(str(r[i])) for r in [header] + cells) for i in range(len(header))]
    lines = ["  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip()
             for r in [header] + cells]
    return rows, "\n".join(lines)
