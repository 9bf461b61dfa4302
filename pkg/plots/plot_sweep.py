#!/usr/bin/env python3
"""Render a hammersim sweep CSV into a trend figure.

Consumes only the CSV/sidecar file contract of the simulator CLI: a CSV with
an axis column followed by flip-count columns, plus an optional
`<csv>.meta.json` sidecar whose resolved config feeds the caption. Never
imports simulator internals.

Usage:
    plot_sweep.py --csv sweep_refresh_interval.csv --out figure.png
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

import os

import matplotlib

matplotlib.use("Agg")  # deterministic, headless rendering
# reproducible SVGs: fixed element-id salt and embedded timestamp
matplotlib.rcParams["svg.hashsalt"] = "hammersim-plots"
os.environ.setdefault("SOURCE_DATE_EPOCH", "0")

import matplotlib.pyplot as plt

DEFAULT_X = "axis_value"
DEFAULT_Y = ("flips_total", "flips_1to0", "flips_0to1")

AXIS_LABELS = {
    "refresh_interval": "refresh interval (ms)",
    "activation_interval": "activation interval (ns)",
    "data_pattern": "data pattern",
    "mitigation_param": "PARA probability p",
}


class MissingColumn(ValueError):
    pass


def read_sweep_csv(path: Path) -> tuple[list[str], list[dict]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file, not even a header")
        return list(reader.fieldnames), list(reader)


def read_sidecar(csv_path: Path) -> dict:
    sidecar = csv_path.with_suffix(csv_path.suffix + ".meta.json")
    if not sidecar.exists():
        return {}
    with open(sidecar) as fh:
        return json.load(fh)


def _coerce(value: str):
    try:
        return float(value)
    except ValueError:
        return value  # categorical axis (data patterns)


def build_figure(csv_path: Path, x_col: str = DEFAULT_X,
                 y_cols: tuple[str, ...] = DEFAULT_Y, log_x: bool = False,
                 log_y: bool = False):
    """Build the figure for a sweep CSV; returns (figure, axes).

    A header-only CSV yields empty axes and a warning; a missing column is
    an error naming the column.
    """
    header, rows = read_sweep_csv(csv_path)
    for col in (x_col, *y_cols):
        if col not in header:
            raise MissingColumn(
                f"column {col!r} not in {csv_path.name} header {header}")
    meta = read_sidecar(csv_path)

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    if not rows:
        warnings.warn(f"{csv_path.name} has no data rows; rendering empty axes")
        ax.text(0.5, 0.5, "no data rows", ha="center", va="center",
                transform=ax.transAxes, color="gray")
    xs = [_coerce(r[x_col]) for r in rows]
    categorical = any(isinstance(x, str) for x in xs)
    positions = list(range(len(xs))) if categorical else xs
    for y_col in y_cols:
        ys = [float(r[y_col]) for r in rows]
        ax.plot(positions, ys, marker="o", label=y_col)
    if categorical:
        ax.set_xticks(positions)
        ax.set_xticklabels([str(x) for x in xs])

    axis = meta.get("axis", meta.get("config", {}).get("sweep", {}).get("axis"))
    ax.set_xlabel(AXIS_LABELS.get(axis, x_col))
    ax.set_ylabel("disturbance errors")
    ax.set_title(f"errors vs {AXIS_LABELS.get(axis, x_col)}")
    if log_x and not categorical:
        ax.set_xscale("log")
    if log_y:
        ax.set_yscale("log")
    if rows:
        ax.legend()
    caption = _caption(meta)
    if caption:
        fig.text(0.5, 0.01, caption, ha="center", fontsize=7, color="dimgray")
    fig.tight_layout(rect=(0, 0.04, 1, 1))
    return fig, ax


def _caption(meta: dict) -> str:
    cfg = meta.get("config")
    if not cfg:
        return ""
    geo = cfg.get("geometry", {})
    fault = cfg.get("fault", {})
    timing = cfg.get("timing", {})
    return (f"{geo.get('banks')}x{geo.get('rows_per_bank')}x"
            f"{geo.get('cols_per_row')} cells, "
            f"threshold>={fault.get('threshold_min')}, "
            f"tRC={timing.get('t_rc_ns')}ns, seed={meta.get('seed')}, "
            f"{meta.get('tool')} {meta.get('version')}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Plot a hammersim sweep CSV")
    parser.add_argument("--csv", required=True, help="sweep CSV path")
    parser.add_argument("--out", required=True, help="output image (png/svg)")
    parser.add_argument("--x", default=DEFAULT_X, help="x column name")
    parser.add_argument("--y", default=",".join(DEFAULT_Y),
                        help="comma-separated y column names")
    parser.add_argument("--log-x", action="store_true")
    parser.add_argument("--log-y", action="store_true")
    args = parser.parse_args(argv)
    try:
        fig, _ = build_figure(Path(args.csv), x_col=args.x,
                              y_cols=tuple(args.y.split(",")),
                              log_x=args.log_x, log_y=args.log_y)
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
