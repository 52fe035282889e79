#!/usr/bin/env python3
"""Render obsrl summary CSVs as learning curves and comparison tables.

Reads only the precomputed columns written by `obsrl summarize` (median, q25,
q75); no statistics are computed here.

    plot_summary.py curves --input a.csv --label benign --phase backward \
        --metric relative_success --x step --out curves.svg
    plot_summary.py table --input a.csv --label benign --input b.csv \
        --label adversarial --column foobar:relative_success --out table.md
"""

import argparse
import csv
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

HEADER = "# obsrl summary v1"
COLUMNS = ["phase", "step", "metric", "n", "samples", "median", "q25", "q75"]
X_COLUMNS = ("step", "samples")


class SummaryError(Exception):
    pass


def read_summary(path):
    """Rows of a summary file with numeric fields parsed; `text` keeps the raw quantiles."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or lines[0] != HEADER:
        raise SummaryError(f"{path}: missing header {HEADER!r}")
    reader = csv.DictReader(lines[1:])
    missing = [c for c in COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise SummaryError(f"{path}: missing column {missing[0]!r}")
    rows = []
    for r in reader:
        rows.append(
            {
                "phase": r["phase"],
                "step": int(r["step"]),
                "metric": r["metric"],
                "n": int(r["n"]),
                "samples": float(r["samples"]),
                "median": float(r["median"]),
                "q25": float(r["q25"]),
                "q75": float(r["q75"]),
                "text": (r["median"], r["q25"], r["q75"]),
            }
        )
    return rows


def series(rows, phase, metric, x):
    """Points of one (phase, metric) curve sorted by `x`."""
    if x not in X_COLUMNS:
        raise SummaryError(f"missing column {x!r}")
    pts = [r for r in rows if r["phase"] == phase and r["metric"] == metric]
    if not pts:
        raise SummaryError(f"no rows with phase {phase!r} and metric {metric!r}")
    return sorted(pts, key=lambda r: (r[x], r["step"]))


def plot_curves(inputs, labels, phase, metric, x, out, log_y=False, title=None):
    """One median curve with a shaded 25-75% band per input. Returns the figure."""
    plt.rcParams["svg.hashsalt"] = "obsrl"
    plt.rcParams["svg.fonttype"] = "none"
    fig, ax = plt.subplots(figsize=(6, 4))
    for path, label in zip(inputs, labels):
        pts = series(read_summary(path), phase, metric, x)
        xs = [p[x] for p in pts]
        ax.plot(xs, [p["median"] for p in pts], marker="o", label=label)
        ax.fill_between(xs, [p["q25"] for p in pts], [p["q75"] for p in pts], alpha=0.25)
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel(x)
    ax.set_ylabel(metric)
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    out = Path(out)
    fig.savefig(out, format=out.suffix.lstrip(".") or "svg", metadata={"Date": None} if out.suffix == ".svg" else None)
    plt.close(fig)
    return fig


def table_cell(rows, phase, metric, step=0):
    for r in rows:
        if r["phase"] == phase and r["metric"] == metric and r["step"] == step:
            median, q25, q75 = r["text"]
            return f"{median} ({q25}, {q75})"
    return "n/a"


def comparison_table(inputs, labels, columns):
    """Markdown table with one row per input and `median (q25, q75)` cells."""
    specs = []
    for c in columns:
        phase, _, metric = c.partition(":")
        if not metric:
            raise SummaryError(f"column {c!r} must be phase:metric")
        specs.append((phase, metric))
    head = "| data | " + " | ".join(f"{p} {m}" for p, m in specs) + " |"
    rule = "|---" * (len(specs) + 1) + "|"
    body = []
    for path, label in zip(inputs, labels):
        rows = read_summary(path)
        body.append(f"| {label} | " + " | ".join(table_cell(rows, p, m) for p, m in specs) + " |")
    return "\n".join([head, rule, *body]) + "\n"


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("curves", "table"):
        p = sub.add_parser(name)
        p.add_argument("--input", action="append", required=True, help="summary CSV, repeatable")
        p.add_argument("--label", action="append", help="series label per input")
        p.add_argument("--out", required=True)
    curves = sub.choices["curves"]
    curves.add_argument("--phase", required=True)
    curves.add_argument("--metric", required=True)
    curves.add_argument("--x", default="step", choices=X_COLUMNS)
    curves.add_argument("--log-y", action="store_true", help="natural-log-scale y axis")
    curves.add_argument("--title")
    table = sub.choices["table"]
    table.add_argument("--column", action="append", required=True, help="phase:metric, repeatable")
    args = parser.parse_args(argv)
    labels = args.label or [Path(p).stem for p in args.input]
    if len(labels) != len(args.input):
        parser.error("give one --label per --input")
    try:
        if args.command == "curves":
            plot_curves(args.input, labels, args.phase, args.metric, args.x, args.out, args.log_y, args.title)
        else:
            Path(args.out).write_text(comparison_table(args.input, labels, args.column))
    except (SummaryError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
