#!/usr/bin/env python3
"""Log-log error-scaling figure from sweep CSVs.

Reads rows produced by `popcode sweep`, groups them by the requested
columns, fits a least-squares slope per group in log2-log2 coordinates
(the same arithmetic as the `popcode fit` subcommand, so the annotated
slopes agree with it to machine precision), and writes a vector figure.
A tab-separated slope table goes to stdout.  The script never recomputes
errors or ledgers: every plotted value is a CSV cell.

Usage: plots/scaling.py --csv sweep.csv --group delta --out fig.svg
Exit codes: 0 ok, 2 usage (missing columns, fewer than 3 points).
"""

from __future__ import annotations

import argparse
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="scaling.py",
        description="Render log-log error scaling per group from sweep CSVs.",
    )
    parser.add_argument("--csv", action="append", required=True,
                        help="sweep CSV path (repeatable)")
    parser.add_argument("--group", default="case,delta,beta",
                        help="comma-separated grouping columns")
    parser.add_argument("--out", required=True,
                        help="output figure path (format by extension)")
    args = parser.parse_args(argv)

    keys = [k.strip() for k in args.group.split(",") if k.strip()]
    if not keys:
        parser.error("--group needs at least one column")
    rows = []
    for path in args.csv:
        try:
            with open(path, newline="") as fh:
                rows.extend(csv.DictReader(fh))
        except OSError as exc:
            parser.error(f"cannot read {path}: {exc}")
    if not rows:
        parser.error("CSV has no data rows")
    missing = [c for c in (*keys, "n", "epsilon_hat") if c not in rows[0]]
    if missing:
        parser.error(f"CSV lacks columns: {', '.join(missing)}")

    groups: dict[tuple, list[tuple[float, float]]] = {}
    for row in rows:
        eps = float(row["epsilon_hat"])
        if eps <= 0.0:
            # zero-error rows carry no scaling information; the fit
            # subcommand skips them too
            continue
        label = tuple(row[k] for k in keys)
        groups.setdefault(label, []).append((float(row["n"]), eps))

    series = []
    for label, pts in sorted(groups.items()):
        if len({n for n, _ in pts}) < 3:
            parser.error(f"group {label} has fewer than 3 distinct n values")
        xs = np.log2([n for n, _ in pts])
        ys = np.log2([e for _, e in pts])
        slope, intercept = (float(c) for c in np.polyfit(xs, ys, 1))
        series.append((label, sorted(pts), slope, intercept, len(pts)))

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for label, pts, slope, _, _ in series:
        name = ", ".join(f"{k}={v}" for k, v in zip(keys, label))
        ax.plot([n for n, _ in pts], [e for _, e in pts],
                marker="o", label=f"{name}: slope {slope:+.3f}")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log", base=2)
    ax.set_xlabel("copies n")
    ax.set_ylabel("protocol error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.out)
    plt.close(fig)

    sys.stdout.write("# group\tslope\tintercept\tpoints\n")
    for label, _, slope, intercept, count in series:
        name = ", ".join(f"{k}={v}" for k, v in zip(keys, label))
        sys.stdout.write(f"{name}\t{slope!r}\t{intercept!r}\t{count}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
