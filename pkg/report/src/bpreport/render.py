"""Render figures from simulator CSV outputs.

Four figure kinds: queue_timeseries and time_spent_timeseries overlay one
series per trace CSV, pressure_curves draws one curve per capacity from a
pressure-table CSV, and sweep_summary plots every sweep cell as a point,
one series per controller.  Values are plotted exactly as they appear in
the files; nothing is aggregated, smoothed, or rescaled.

Exit codes: 0 success, 1 unusable input content (missing column, empty or
non-numeric data), 2 usage or I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_USAGE = 2

# per kind: required columns, whether it overlays many files or reads one
KINDS: Dict[str, dict] = {
    "queue_timeseries": {
        "columns": ("slot", "total_queue"),
        "multi_input": True,
        "x": "slot",
        "y": "total_queue",
        "x_label": "slot",
        "y_label": "total queue [vehicles]",
    },
    "time_spent_timeseries": {
        "columns": ("slot", "avg_time_spent_seconds"),
        "multi_input": True,
        "x": "slot",
        "y": "avg_time_spent_seconds",
        "x_label": "slot",
        "y_label": "average time spent [s]",
    },
    "pressure_curves": {
        "columns": ("capacity", "q", "P"),
        "multi_input": False,
        "x_label": "queue length q [vehicles]",
        "y_label": "pressure P",
    },
    "sweep_summary": {
        "columns": ("multiplier", "controller", "time_avg_total_queue"),
        "multi_input": False,
        "x_label": "arrival-rate multiplier",
        "y_label": "time-averaged total queue [vehicles]",
    },
}


class ReportError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class ReportRequest:
    kind: str
    inputs: List[str]
    out: str
    labels: List[str] = field(default_factory=list)


def read_rows(path: str, columns: Sequence[str], kind: str) -> List[dict]:
    """Load one CSV and check it carries every column the kind needs."""
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames
            rows = list(reader)
    except OSError as err:
        raise ReportError(EXIT_USAGE, f"cannot read {path}: {err}")
    if header is None:
        raise ReportError(EXIT_BAD_INPUT, f"{path} is empty")
    for column in columns:
        if column not in header:
            raise ReportError(
                EXIT_BAD_INPUT, f"{path} is missing column {column!r} needed for {kind}"
            )
    if not rows:
        raise ReportError(EXIT_BAD_INPUT, f"{path} has no data rows")
    return rows


def _floats(rows: List[dict], column: str, path: str) -> List[float]:
    values = []
    for i, row in enumerate(rows):
        try:
            values.append(float(row[column]))
        except (TypeError, ValueError):
            raise ReportError(
                EXIT_BAD_INPUT,
                f"{path} data row {i + 1}: column {column!r} is not numeric: {row[column]!r}",
            )
    return values


def _series_labels(defaults: List[str], labels: Sequence[str]) -> List[str]:
    if not labels:
        return defaults
    if len(labels) != len(defaults):
        raise ReportError(
            EXIT_USAGE,
            f"got {len(labels)} labels for {len(defaults)} series",
        )
    return list(labels)


def _new_axes():
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.grid(True, alpha=0.3)
    return fig, ax


def _first_seen(values: List[str]) -> List[str]:
    seen: List[str] = []
    for v in values:
        if v not in seen:
            seen.append(v)
    return seen


def build_figure(kind: str, inputs: Sequence[str], labels: Sequence[str] = ()):
    """One matplotlib figure for the request; caller owns closing it."""
    if kind not in KINDS:
        raise ReportError(EXIT_USAGE, f"unknown kind {kind!r}; have {sorted(KINDS)}")
    style = KINDS[kind]
    if not inputs:
        raise ReportError(EXIT_USAGE, "at least one input CSV is required")
    if not style["multi_input"] and len(inputs) != 1:
        raise ReportError(EXIT_USAGE, f"{kind} takes exactly one input CSV, got {len(inputs)}")

    fig, ax = _new_axes()
    if style["multi_input"]:
        names = _series_labels([Path(p).stem for p in inputs], labels)
        for path, name in zip(inputs, names):
            rows = read_rows(path, style["columns"], kind)
            x = _floats(rows, style["x"], path)
            y = _floats(rows, style["y"], path)
            ax.plot(x, y, linewidth=1.8, label=name)
    elif kind == "pressure_curves":
        path = inputs[0]
        rows = read_rows(path, style["columns"], kind)
        capacities = _first_seen([row["capacity"] for row in rows])
        names = _series_labels([f"C={float(c):g}" for c in capacities], labels)
        for capacity, name in zip(capacities, names):
            mine = [row for row in rows if row["capacity"] == capacity]
            ax.plot(
                _floats(mine, "q", path),
                _floats(mine, "P", path),
                linewidth=1.8,
                label=name,
            )
        ax.set_ylim(-0.05, 1.05)
    else:  # sweep_summary
        path = inputs[0]
        rows = read_rows(path, style["columns"], kind)
        controllers = _first_seen([row["controller"] for row in rows])
        names = _series_labels([c.upper() for c in controllers], labels)
        markers = ["o", "s", "^", "D", "v", "P"]
        for i, (controller, name) in enumerate(zip(controllers, names)):
            mine = [row for row in rows if row["controller"] == controller]
            ax.plot(
                _floats(mine, "multiplier", path),
                _floats(mine, "time_avg_total_queue", path),
                linestyle="",
                marker=markers[i % len(markers)],
                alpha=0.7,
                label=name,
            )
    ax.set_xlabel(style["x_label"])
    ax.set_ylabel(style["y_label"])
    ax.legend()
    fig.tight_layout()
    return fig


def render(request: ReportRequest) -> str:
    """Build the figure and write it to request.out; returns the path."""
    fig = build_figure(request.kind, request.inputs, request.labels)
    out = Path(request.out)
    save_args = {"dpi": 150}
    if out.suffix == ".svg":
        save_args["metadata"] = {"Date": None}  # embedded date breaks reproducibility
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, **save_args)
    except OSError as err:
        raise ReportError(EXIT_USAGE, f"cannot write {out}: {err}")
    finally:
        plt.close(fig)
    return str(out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bpreport",
        description="Render figures from simulator CSV outputs.",
    )
    parser.add_argument("--kind", required=True, choices=sorted(KINDS))
    parser.add_argument(
        "--in",
        dest="inputs",
        action="append",
        required=True,
        metavar="CSV",
        help="input CSV; repeat for overlays",
    )
    parser.add_argument(
        "--label",
        dest="labels",
        action="append",
        default=[],
        help="series label; repeat to match the series order",
    )
    parser.add_argument("--out", required=True, help="output image path (.png or .svg)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    request = ReportRequest(kind=args.kind, inputs=args.inputs, out=args.out, labels=args.labels)
    try:
        out = render(request)
    except ReportError as err:
        print(str(err), file=sys.stderr)
        return err.code
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
