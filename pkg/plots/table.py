#!/usr/bin/env python3
"""Markdown memory-ledger table from sweep CSVs.

For each data row, renders the measured classical/quantum memory next to
the documented per-case formulas evaluated at that row's (n, delta).
With L = log2 n and (f_c, f_q) the per-case counts of codec-compressed
and displacement parameters, the formulas are

    classical bits = f_q L / 2 + f_c (1/2 + delta) L
    qubits         = f_q delta L
    thermal codec  = log2(floor(n^(1/2+delta))) classical bits, 0 qubits

where the floor carries 1e-12 relative slack, matching the codec's
interval count.  Measured values are CSV cells; the formula columns are
the only arithmetic this script performs.

Usage: plots/table.py --csv sweep.csv --out table.md
Exit codes: 0 ok, 2 usage (empty input, missing columns, unknown case).
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

# case id -> (codec-compressed parameters f_c, displacement parameters f_q)
CASE_COUNTS = {
    "0": (0, 0), "1": (1, 0), "2": (0, 2), "3": (1, 2),
    "4": (0, 1), "5": (1, 1), "6": (0, 1), "7": (1, 1),
}

HEADER = (
    "| case | n | delta | classical bits | classical formula "
    "| qubits | qubit formula |"
)


def formula_bits(case: str, n: int, delta: float) -> tuple[float, float]:
    bits = math.log2(n)
    if case == "thermal":
        intervals = max(1, int(math.floor(n ** (0.5 + delta) * (1.0 + 1e-12))))
        return math.log2(intervals), 0.0
    f_c, f_q = CASE_COUNTS[case]
    return 0.5 * f_q * bits + f_c * (0.5 + delta) * bits, f_q * delta * bits


def _cell(value: float) -> str:
    return f"{value:.12g}"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="table.py",
        description="Render measured-vs-formula memory ledgers as markdown.",
    )
    parser.add_argument("--csv", required=True, help="sweep CSV path")
    parser.add_argument("--out", default=None,
                        help="output markdown path (default stdout)")
    args = parser.parse_args(argv)

    try:
        with open(args.csv, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        parser.error(f"cannot read {args.csv}: {exc}")
    if not rows:
        parser.error("CSV has no data rows")
    missing = [c for c in ("case", "n", "delta", "cbits", "qubits")
               if c not in rows[0]]
    if missing:
        parser.error(f"CSV lacks columns: {', '.join(missing)}")
    for row in rows:
        if row["case"] != "thermal" and row["case"] not in CASE_COUNTS:
            parser.error(f"unknown case {row['case']!r}")

    def order(row):
        case = row["case"]
        case_rank = (1, 0) if case == "thermal" else (0, int(case))
        return (*case_rank, int(row["n"]), float(row["delta"]))

    lines = [HEADER, "|---|---|---|---|---|---|---|"]
    for row in sorted(rows, key=order):
        cbits_formula, qubits_formula = formula_bits(
            row["case"], int(row["n"]), float(row["delta"])
        )
        lines.append(
            f"| {row['case']} | {row['n']} | {row['delta']} "
            f"| {_cell(float(row['cbits']))} | {_cell(cbits_formula)} "
            f"| {_cell(float(row['qubits']))} | {_cell(qubits_formula)} |"
        )
    text = "\n".join(lines) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
