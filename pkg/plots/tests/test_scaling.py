"""Scaling figure script: slope agreement with the fit subcommand, figure
output, and usage errors."""

import csv
import json
import subprocess
import sys
from pathlib import Path

from popcode.cli import CSV_COLUMNS, main as popcode_main

SCRIPT = Path(__file__).resolve().parents[1] / "scaling.py"


def run_script(*argv):
    return subprocess.run(
        [sys.executable, str(SCRIPT), *argv], capture_output=True, text=True
    )


def parse_slopes(stdout):
    table = {}
    for line in stdout.splitlines():
        if not line or line.startswith("#"):
            continue
        name, slope, intercept, points = line.split("\t")
        table[name] = (float(slope), float(intercept), int(points))
    return table


def write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        writer.writerows(rows)


def test_synthetic_power_law_annotated_exactly(tmp_path):
    csv_path = tmp_path / "synthetic.csv"
    write_rows(csv_path, [
        [2, n, 0.3, 0.3, 0.0, 0.2, n**-0.2, 0.0, 0, 0, 0, 1, 0, 200]
        for n in (256, 1024, 4096, 16384)
    ])
    fig = tmp_path / "fig.svg"
    proc = run_script("--csv", str(csv_path), "--group", "delta", "--out", str(fig))
    assert proc.returncode == 0, proc.stderr
    slopes = parse_slopes(proc.stdout)
    slope, _, points = slopes["delta=0.3"]
    assert abs(slope + 0.2) < 1e-9
    assert points == 4
    content = fig.read_text()
    assert content.lstrip().startswith("<?xml")
    assert "<svg" in content


def test_slopes_match_fit_subcommand_on_thermal_sweep(tmp_path):
    sweep_csv = tmp_path / "thermal.csv"
    assert popcode_main([
        "sweep", "--case", "thermal", "--n", "256,1024,4096,16384",
        "--delta", "0.2", "--beta", "0.3", "--out", str(sweep_csv),
    ]) == 0
    fit_json = tmp_path / "fit.json"
    assert popcode_main(["fit", "--csv", str(sweep_csv), "--out", str(fit_json)]) == 0
    fit_groups = json.loads(fit_json.read_text())["groups"]

    fig = tmp_path / "thermal.svg"
    proc = run_script("--csv", str(sweep_csv), "--group", "case,delta,beta",
                      "--out", str(fig))
    assert proc.returncode == 0, proc.stderr
    slopes = parse_slopes(proc.stdout)
    assert len(slopes) == len(fit_groups) == 1
    for group in fit_groups:
        name = (f"case={group['case']}, delta={group['delta']}, "
                f"beta={group['beta']}")
        assert abs(slopes[name][0] - group["slope"]) < 1e-9

    with open(sweep_csv) as fh:
        errors = [float(row["epsilon_hat"]) for row in csv.DictReader(fh)]
    assert all(a > b for a, b in zip(errors, errors[1:]))
    assert fig.exists()


def test_two_deltas_render_two_series_steeper_for_larger_delta(tmp_path):
    sweep_csv = tmp_path / "two.csv"
    assert popcode_main([
        "sweep", "--case", "thermal", "--n", "256,1024,4096,16384",
        "--delta", "0.1,0.3", "--beta", "0.3", "--out", str(sweep_csv),
    ]) == 0
    proc = run_script("--csv", str(sweep_csv), "--group", "delta",
                      "--out", str(tmp_path / "two.svg"))
    assert proc.returncode == 0, proc.stderr
    slopes = parse_slopes(proc.stdout)
    assert set(slopes) == {"delta=0.1", "delta=0.3"}
    assert slopes["delta=0.3"][0] < slopes["delta=0.1"][0] < 0.0


def test_missing_column_exits_two(tmp_path):
    csv_path = tmp_path / "bad.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["case", "n", "delta"])
        writer.writerow([2, 256, 0.3])
    proc = run_script("--csv", str(csv_path), "--out", str(tmp_path / "f.svg"))
    assert proc.returncode == 2
    assert "columns" in proc.stderr


def test_fewer_than_three_points_exits_two(tmp_path):
    csv_path = tmp_path / "short.csv"
    write_rows(csv_path, [
        [2, n, 0.3, 0.3, 0.0, 0.2, n**-0.2, 0.0, 0, 0, 0, 1, 0, 200]
        for n in (256, 1024)
    ])
    proc = run_script("--csv", str(csv_path), "--out", str(tmp_path / "f.svg"))
    assert proc.returncode == 2
    assert "fewer than 3" in proc.stderr
