"""Command-line entry point.

Exit codes: 0 all verdicts pass, 1 some verdict failed, 2 bad or missing
configuration, 3 blow-up during a run.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .diagnostics import all_checks, summary_document, write_json
from .errors import BlowUp, ConfigError
from .evolution import run
from .experiments import (ExperimentConfig, delta_sweep, load_config, mms_run,
                          refinement_study, spatial_reduction_holds, stability_experiment)
from .nonlocal_p import solve_p
from .verification import format_table, run_verification

log = logging.getLogger("ostrovsky")

OUT_ENV = "OSTROVSKY_OUT"
DEFAULT_OUT = "ostrovsky-out"

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3


def output_dir(args, config: ExperimentConfig) -> Path:
    """--out, then output.dir from the config, then $OSTROVSKY_OUT, then a default."""
    for candidate in (args.out, config.out_dir, os.environ.get(OUT_ENV)):
        if candidate:
            path = Path(candidate)
            break
    else:
        path = Path(DEFAULT_OUT)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _fmt(value) -> str:
    return format(float(value), ".17g")


def write_rows(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(_fmt(v) for v in row)


def write_snapshot(directory: Path, t: float, u, p):
    write_rows(directory / f"snapshot_{t:.6f}.csv", ("x", "u", "P"),
               zip(u.grid.x, u.values, p.values))


def _config_doc(config: ExperimentConfig) -> dict:
    doc = asdict(config)
    doc.pop("out_dir")
    return doc


# --- subcommands ---------------------------------------------------------------

def cmd_run(config: ExperimentConfig, out: Path) -> int:
    u0 = config.initial_data()
    solver = config.solver
    final, report = run(u0, solver, config.flux_model())
    write_snapshot(out, 0.0, u0, solve_p(u0, solver.delta))
    write_snapshot(out, final.t, final.u, final.p)
    report.to_csv(out / "diagnostics.csv")
    verdicts = all_checks(report)
    doc = summary_document(report, verdicts, {"config": _config_doc(config)})
    write_json(doc, out / "summary.json")
    for v in verdicts:
        print(f"{v.name:<20} {'PASS' if v.passed else 'FAIL'}")
    return EXIT_OK if doc["passed"] else EXIT_FAIL


def cmd_delta_sweep(config: ExperimentConfig, out: Path, workers: int = 1) -> int:
    table = delta_sweep(config, config.initial_data(), workers=workers)
    write_rows(out / "sweep.csv",
               ("delta", "error", "order", "sqrt_delta_sup_px", "majorant"), table.rows())
    for d, report in table.reports.items():
        sub = out / f"delta_{d:.6g}"
        sub.mkdir(exist_ok=True)
        report.to_csv(sub / "diagnostics.csv")
    e, s = table.errors, table.sqrt_delta_sup_px
    checks = {
        "errors_decreasing": bool(np.all(np.diff(e) < 0)),
        "sqrt_delta_sup_px_decreasing": bool(np.all(np.diff(s) < 0)),
        "within_majorant": bool(np.all(s <= table.majorants)),
    }
    passed = all(checks.values())
    write_json({"config": _config_doc(config), "dt": table.dt, "checks": checks,
                "rows": [list(r) for r in table.rows()], "passed": passed},
               out / "summary.json")
    for row in table.rows():
        print("delta={:<8g} E={:.6e} order={:.4f} sqrt(delta)*sup|Px|={:.6e} majorant={:.6e}"
              .format(*row))
    return EXIT_OK if passed else EXIT_FAIL


def cmd_stability(config: ExperimentConfig, out: Path) -> int:
    u0 = config.initial_data()
    rep = stability_experiment(config, u0, config.perturbed(u0))
    write_rows(out / "stability.csv", ("time", "omega_l2"), zip(rep.times, rep.omega_l2))
    write_json({"config": _config_doc(config), "verdict": rep.verdict.as_dict(),
                "c_fit": rep.c_fit, "c_bound": rep.c_bound, "bound_terms": rep.bound_terms,
                "passed": rep.verdict.passed}, out / "summary.json")
    print(f"C_fit={rep.c_fit:.6g} C_bound={rep.c_bound:.6g} "
          f"{'PASS' if rep.verdict.passed else 'FAIL'}")
    return EXIT_OK if rep.verdict.passed else EXIT_FAIL


def cmd_refine(config: ExperimentConfig, out: Path) -> int:
    res = refinement_study(config)
    write_rows(out / "refine_space.csv", ("N", "error"),
               zip(res.n_list[:-1], res.spatial_errors))
    write_rows(out / "refine_time.csv", ("dt", "error"),
               zip(res.dt_list[:-1], res.temporal_errors))
    finite = bool(np.all(np.isfinite(res.spatial_errors))
                  and np.all(np.isfinite(res.temporal_errors)))
    write_json({"config": _config_doc(config),
                "spatial_errors": res.spatial_errors.tolist(),
                "spatial_orders": res.spatial_orders.tolist(),
                "temporal_errors": res.temporal_errors.tolist(),
                "temporal_orders": res.temporal_orders.tolist(),
                "passed": finite}, out / "summary.json")
    print("temporal orders:", " ".join(f"{o:.3f}" for o in res.temporal_orders))
    return EXIT_OK if finite else EXIT_FAIL


def cmd_mms(config: ExperimentConfig, out: Path) -> int:
    res = mms_run(config)
    write_rows(out / "mms_space.csv", ("N", "error"), zip(res.n_list, res.spatial_errors))
    write_rows(out / "mms_time.csv", ("dt", "error"), zip(res.dt_list, res.temporal_errors))
    spatial_ok = spatial_reduction_holds(res)
    temporal_ok = bool(np.all(np.abs(res.temporal_orders - 4.0) <= 0.3))
    passed = spatial_ok and temporal_ok
    write_json({"config": _config_doc(config), "solution": res.solution,
                "spatial_errors": res.spatial_errors.tolist(),
                "temporal_floor": res.temporal_floor,
                "temporal_errors": res.temporal_errors.tolist(),
                "temporal_orders": res.temporal_orders.tolist(),
                "spatial_passed": spatial_ok, "temporal_passed": temporal_ok,
                "passed": passed}, out / "summary.json")
    print(f"spatial {'PASS' if spatial_ok else 'FAIL'}  temporal orders "
          + " ".join(f"{o:.3f}" for o in res.temporal_orders))
    return EXIT_OK if passed else EXIT_FAIL


def cmd_verify(out: Path) -> int:
    results = run_verification()
    print(format_table(results))
    passed = all(v.passed for _, v in results)
    write_json({"criteria": {str(n): v.as_dict() for n, v in results}, "passed": passed},
               out / "verify.json")
    return EXIT_OK if passed else EXIT_FAIL


# --- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ostrovsky",
        description="Dissipative Ostrovsky-Hunter solver and verification harness.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("run", "single run with diagnostics and snapshots"),
        ("delta-sweep", "errors against the delta = 0 run along a delta list"),
        ("stability", "twin-run L2 stability test"),
        ("refine", "self-convergence in N and dt"),
        ("mms", "manufactured-solution verification"),
        ("verify", "run every built-in acceptance scenario"),
    ]:
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", type=Path, help="key = value configuration file")
        p.add_argument("--out", type=Path, help="output directory")
        if name == "delta-sweep":
            p.add_argument("--workers", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config) if args.config else ExperimentConfig()
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = output_dir(args, config)
    try:
        if args.command == "run":
            return cmd_run(config, out)
        if args.command == "delta-sweep":
            return cmd_delta_sweep(config, out, args.workers)
        if args.command == "stability":
            return cmd_stability(config, out)
        if args.command == "refine":
            return cmd_refine(config, out)
        if args.command == "mms":
            return cmd_mms(config, out)
        return cmd_verify(out)
    except BlowUp as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
