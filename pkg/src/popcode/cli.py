"""Command-line front door: single runs, sweeps, ledger audits, and
power-law fits, all emitting machine-readable reports.

Single runs print JSON (sorted keys, two-space indent); sweeps write CSV
with the fixed header case,n,delta,alpha_re,alpha_im,beta,epsilon_hat,
epsilon_stderr,cbits,qubits,leakage,seed,cutoff,mc_samples.  Outputs are
byte-identical across repeated invocations with the same flags and seed;
wall-clock metadata lives only in a sidecar .meta.json next to --out.
Exit codes: 0 on success, 2 on flag errors, 3 on a numerical abort
(a Fock window that cannot hold the requested state).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .auditor import audit
from .channels import ModeParams
from .fock import CutoffError
from .protocols import ParamRanges, ProtocolConfig, case_param_counts, ledger_for, run_case
from .thermal_codec import codec_memory_bits, exact_codec_error, interval_scheme

CSV_COLUMNS = (
    "case",
    "n",
    "delta",
    "alpha_re",
    "alpha_im",
    "beta",
    "epsilon_hat",
    "epsilon_stderr",
    "cbits",
    "qubits",
    "leakage",
    "seed",
    "cutoff",
    "mc_samples",
)

def parse_complex(text: str) -> complex:
    """Parse 'a+bi' literals: '0.3', '0.3+0i', '-0.5-0.2i', '1i', 'i'."""
    s = text.strip().replace(" ", "")
    if not s:
        raise ValueError("empty complex literal")
    if s.endswith(("i", "I")):
        body = s[:-1]
        m = re.match(
            r"^(?P<re>[+-]?\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)?"
            r"(?P<im>[+-]?(?:\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)?)$",
            body,
        )
        if m is None:
            raise ValueError(f"bad complex literal {text!r}")
        re_part = m.group("re")
        im_part = m.group("im")
        if im_part in (None, ""):
            # the whole body is the imaginary coefficient
            im_part, re_part = re_part, None
            if im_part in (None, ""):
                im_part = "1"
        elif im_part in ("+", "-"):
            im_part += "1"
        return complex(float(re_part) if re_part else 0.0, float(im_part))
    return complex(float(s), 0.0)


def _json_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _config_hash(payload: dict) -> str:
    digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode())
    return digest.hexdigest()[:16]


def _write_output(text: str, out: str | None, meta: dict) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w") as fh:
        fh.write(text)
    meta = dict(meta)
    meta["timestamp"] = datetime.now(timezone.utc).isoformat()
    meta["version"] = __version__
    with open(out + ".meta.json", "w") as fh:
        fh.write(_json_dumps(meta))


def _resolve_alpha(args, parser: argparse.ArgumentParser) -> complex:
    if args.alpha is not None and args.abs_alpha is not None:
        parser.error("--alpha and --abs-alpha are mutually exclusive")
    if args.abs_alpha is not None:
        phase = args.phase if args.phase is not None else 0.0
        return args.abs_alpha * complex(math.cos(phase), math.sin(phase))
    if args.phase is not None and args.alpha is None:
        parser.error("--phase requires --abs-alpha")
    return args.alpha if args.alpha is not None else 0.0 + 0.0j


def _protocol_config(case: int, n: int, delta: float, alpha: complex, beta: float,
                     cutoff: int | None, seed: int, mc: int) -> ProtocolConfig:
    reach = max(1.0, abs(alpha))
    return ProtocolConfig(
        case=case,
        n=n,
        delta=delta,
        true_params=ModeParams(alpha=alpha, beta=beta),
        param_ranges=ParamRanges(alpha_max=reach),
        cutoff=cutoff,
        seed=seed,
        mc_samples=mc,
    )


def _thermal_payload(n: int, delta: float, beta: float) -> dict:
    scheme = interval_scheme(n, delta)
    return {
        "epsilon": exact_codec_error(n, beta, delta),
        "memory_bits": codec_memory_bits(scheme),
        "intervals": scheme.t + 1,
        "interval_width": scheme.width,
    }


def _ledger_payload(ledger) -> dict:
    return {
        "cbits": ledger.cbits,
        "qubits": ledger.qubits,
        "cbits_ceil": ledger.cbits_ceil,
        "qubits_ceil": ledger.qubits_ceil,
        "breakdown": dict(ledger.breakdown),
    }


def cmd_run(args, parser: argparse.ArgumentParser) -> int:
    alpha = _resolve_alpha(args, parser)
    config_payload = {
        "case": args.case if args.case == "thermal" else int(args.case),
        "n": args.n,
        "delta": args.delta,
        "alpha_re": alpha.real,
        "alpha_im": alpha.imag,
        "beta": args.beta,
        "cutoff": args.cutoff,
        "seed": args.seed,
        "mc_samples": args.mc,
    }
    if args.case == "thermal":
        result = _thermal_payload(args.n, args.delta, args.beta)
    else:
        config = _protocol_config(
            int(args.case), args.n, args.delta, alpha, args.beta,
            args.cutoff, args.seed, args.mc,
        )
        run = run_case(config)
        result = {
            "epsilon_hat": run.epsilon_hat,
            "epsilon_stderr": run.epsilon_stderr,
            "ledger": _ledger_payload(run.ledger),
            "diagnostics": dict(run.diagnostics),
        }
    payload = {"config": config_payload, "result": result}
    _write_output(
        _json_dumps(payload), args.out,
        {"command": "run", "config_hash": _config_hash(config_payload)},
    )
    return 0


def _sweep_point(task: tuple) -> dict:
    """One grid point; module-level so process pools can pickle it."""
    idx, case, n, delta, alpha_re, alpha_im, beta, cutoff, seed, mc = task
    alpha = complex(alpha_re, alpha_im)
    if case == "thermal":
        payload = _thermal_payload(n, delta, beta)
        return {
            "case": "thermal", "n": n, "delta": delta,
            "alpha_re": 0.0, "alpha_im": 0.0, "beta": beta,
            "epsilon_hat": payload["epsilon"], "epsilon_stderr": 0.0,
            "cbits": payload["memory_bits"], "qubits": 0.0, "leakage": 0.0,
            "seed": seed, "cutoff": 0, "mc_samples": 0,
        }
    config = _protocol_config(int(case), n, delta, alpha, beta, cutoff, seed, mc)
    run = run_case(config)
    return {
        "case": case, "n": n, "delta": delta,
        "alpha_re": alpha.real, "alpha_im": alpha.imag, "beta": beta,
        "epsilon_hat": run.epsilon_hat, "epsilon_stderr": run.epsilon_stderr,
        "cbits": run.ledger.cbits, "qubits": run.ledger.qubits,
        "leakage": run.diagnostics.get("leakage_mean", 0.0),
        "seed": seed, "cutoff": int(run.diagnostics.get("frame_cutoff_max", 0)),
        "mc_samples": mc,
    }


def cmd_sweep(args, parser: argparse.ArgumentParser) -> int:
    alpha = _resolve_alpha(args, parser)
    cases = [c.strip() for c in args.case.split(",") if c.strip()]
    ns = [int(v) for v in args.n.split(",") if v.strip()]
    deltas = [float(v) for v in args.delta.split(",") if v.strip()]
    betas = [float(v) for v in args.beta.split(",") if v.strip()]
    if not (cases and ns and deltas and betas):
        parser.error("sweep grid is empty")
    tasks = []
    idx = 0
    for case in cases:
        for n in ns:
            for delta in deltas:
                for beta in betas:
                    point_seed = args.seed * 1_000_003 + idx
                    tasks.append((idx, case, n, delta, alpha.real, alpha.imag,
                                  beta, args.cutoff, point_seed, args.mc))
                    idx += 1
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row[k] for k in CSV_COLUMNS})
    grid_payload = {
        "cases": cases, "ns": ns, "deltas": deltas, "betas": betas,
        "alpha_re": alpha.real, "alpha_im": alpha.imag,
        "cutoff": args.cutoff, "seed": args.seed, "mc": args.mc,
    }
    _write_output(
        buffer.getvalue(), args.out,
        {"command": "sweep", "config_hash": _config_hash(grid_payload)},
    )
    return 0


def cmd_audit(args, parser: argparse.ArgumentParser) -> int:
    case = int(args.case)
    f = case_param_counts(case)
    if f == 0:
        parser.error("case 0 has no independent parameters to audit")
    ledger = ledger_for(case, args.n, args.delta)
    report = audit(ledger, f=f, n=args.n, delta=args.delta, case=case)
    payload = {
        "case": case,
        "n": args.n,
        "delta": args.delta,
        "f": f,
        "ledger": _ledger_payload(ledger),
        "mutual_information_bound": report.mutual_information_bound,
        "n_enc_bound": report.n_enc_bound,
        "ledger_total": report.ledger_total,
        "slack": report.slack,
        "verdict": report.verdict,
    }
    _write_output(
        _json_dumps(payload), args.out,
        {"command": "audit", "config_hash": _config_hash(
            {"case": case, "n": args.n, "delta": args.delta})},
    )
    return 0


def cmd_fit(args, parser: argparse.ArgumentParser) -> int:
    try:
        with open(args.csv) as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        parser.error(f"cannot read {args.csv}: {exc}")
    if not rows:
        parser.error("CSV has no data rows")
    missing = [c for c in ("case", "n", "delta", "beta", "epsilon_hat") if c not in rows[0]]
    if missing:
        parser.error(f"CSV lacks columns: {', '.join(missing)}")
    groups: dict[tuple, list[tuple[float, float]]] = {}
    for row in rows:
        eps = float(row["epsilon_hat"])
        if eps <= 0.0:
            continue
        label = row["case"]
        key = (int(label) if label.isdigit() else label, float(row["delta"]), float(row["beta"]))
        groups.setdefault(key, []).append((float(row["n"]), eps))
    reports = []
    for (case, delta, beta), pts in sorted(groups.items(), key=lambda kv: (str(kv[0][0]), kv[0][1:])):
        if len({n for n, _ in pts}) < 2:
            continue
        xs = np.log2([n for n, _ in pts])
        ys = np.log2([e for _, e in pts])
        if len(pts) >= 3:
            coeffs, cov = np.polyfit(xs, ys, 1, cov=True)
            ci95 = 1.96 * math.sqrt(max(cov[0, 0], 0.0))
        else:
            coeffs = np.polyfit(xs, ys, 1)
            ci95 = 0.0
        reports.append({
            "case": case,
            "delta": delta,
            "beta": beta,
            "slope": float(coeffs[0]),
            "intercept": float(coeffs[1]),
            "ci95": ci95,
            "points": len(pts),
        })
    if not reports:
        parser.error("no group has two or more distinct n values")
    _write_output(
        _json_dumps({"groups": reports}), args.out,
        {"command": "fit", "config_hash": _config_hash({"csv": args.csv})},
    )
    return 0


def _add_common(sub: argparse.ArgumentParser, sweep: bool = False) -> None:
    list_note = " (comma-separated list)" if sweep else ""
    sub.add_argument("--case", required=True,
                     help=f"protocol case 0..7 or 'thermal'{list_note}")
    if sweep:
        sub.add_argument("--n", required=True, help="copy counts, comma-separated")
        sub.add_argument("--delta", required=True, help="memory exponents, comma-separated")
        sub.add_argument("--beta", default="0.0", help="thermal parameters, comma-separated")
    else:
        sub.add_argument("--n", type=int, required=True, help="number of copies")
        sub.add_argument("--delta", type=float, required=True, help="memory exponent")
        sub.add_argument("--beta", type=float, default=0.0, help="thermal parameter")
    sub.add_argument("--alpha", type=parse_complex, default=None,
                     help="displacement as a+bi literal")
    sub.add_argument("--abs-alpha", type=float, default=None, help="displacement modulus")
    sub.add_argument("--phase", type=float, default=None, help="displacement phase, radians")
    sub.add_argument("--cutoff", type=int, default=None, help="forced Fock window")
    sub.add_argument("--seed", type=int, default=0, help="base RNG seed")
    sub.add_argument("--mc", type=int, default=200, help="Monte-Carlo draws")
    sub.add_argument("--out", default=None, help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="popcode",
        description="Simulate and audit compression protocols for identically "
                    "prepared quantum states.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    run_p = subs.add_parser("run", help="single protocol run, JSON output")
    _add_common(run_p)
    sweep_p = subs.add_parser("sweep", help="cartesian grid of runs, CSV output")
    _add_common(sweep_p, sweep=True)
    sweep_p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    audit_p = subs.add_parser("audit", help="ledger-vs-bound audit, JSON output")
    audit_p.add_argument("--case", required=True, help="protocol case 1..7")
    audit_p.add_argument("--n", type=int, required=True)
    audit_p.add_argument("--delta", type=float, required=True)
    audit_p.add_argument("--out", default=None)
    fit_p = subs.add_parser("fit", help="log-log slope per (case, delta, beta) group")
    fit_p.add_argument("--csv", required=True, help="sweep CSV to fit")
    fit_p.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": cmd_run, "sweep": cmd_sweep, "audit": cmd_audit, "fit": cmd_fit}
    try:
        return handlers[args.command](args, parser)
    except CutoffError as exc:
        print(f"popcode: numerical abort: {exc}", file=sys.stderr)
        return 3
    except (ValueError, TypeError) as exc:
        parser.error(str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
