"""Command line entry point: ``dcmlab run|sweep|ingest|export-traj``.

Exit codes: 0 all checks passed, 1 some check failed, 2 invalid input,
3 degenerate estimate.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .errors import DegenerateEstimateError, IngestError, ScenarioError
from .estimator import Centering
from .formats import matrix_from_json
from .scenario import dumps, export_trajectories, ingest, load_scenario, run, sweep, write_sweep

OUT_ENV = "DCMLAB_OUT"


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV, "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _scenario(args):
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    return scenario


def _shape(text: str):
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'dA,dB', got {text!r}") from None
    return a, b


def _n_list(text: str):
    try:
        return [int(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def cmd_run(args) -> int:
    scenario = _scenario(args)
    report = run(scenario, args.threads)
    path = _out_dir(args) / f"{scenario.name}.report.json"
    path.write_text(dumps(report))
    if args.traj:
        export_trajectories(scenario, _out_dir(args) / f"{scenario.name}.traj.csv", args.threads)
    for c in report["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']} value={c['value']} threshold={c['threshold']}")
    print(f"report: {path}")
    return 0 if report["passed"] else 1


def cmd_sweep(args) -> int:
    scenario = _scenario(args)
    rows = sweep(scenario, args.n, args.threads)
    path = _out_dir(args) / f"{scenario.name}.sweep.csv"
    write_sweep(path, rows)
    for row in rows:
        print(f"N={row['n_windows']} distance={row['trace_distance']} min_eig={row['min_eigenvalue']}")
    print(f"sweep: {path}")
    return 0 if all(r["passed"] for r in rows) else 1


def cmd_export(args) -> int:
    scenario = _scenario(args)
    path = _out_dir(args) / f"{scenario.name}.traj.csv"
    export_trajectories(scenario, path, args.threads)
    print(f"trajectories: {path}")
    return 0


def cmd_ingest(args) -> int:
    if args.centering == "true_mean_zero":
        centering = Centering.zero_mean(args.shape[0] * args.shape[1])
    else:
        centering = Centering(args.centering)
    target = None
    if args.target:
        target = matrix_from_json(json.loads(Path(args.target).read_text()))
    report = ingest(args.data, args.shape, args.window, centering, args.n_windows, target)
    density_ok = report["estimate"]["density_check"]["passed"]
    path = _out_dir(args) / f"{Path(args.data).stem}.ingest.json"
    path.write_text(dumps(report))
    print(f"report: {path}")
    return 0 if density_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcmlab", description="Two-scale covariance simulation and checks.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--threads", type=int, default=1, help="window-level worker threads")
    common.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or .)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run one scenario")
    p.add_argument("scenario")
    p.add_argument("--traj", action="store_true", help="also write the trajectory CSV")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", parents=[common], help="repeat a scenario over window counts")
    p.add_argument("scenario")
    p.add_argument("--n", type=_n_list, default=[10, 100, 1000])
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export-traj", parents=[common], help="write the scenario's trajectories as CSV")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("ingest", parents=[common], help="estimate from a time-series CSV")
    p.add_argument("data")
    p.add_argument("--shape", type=_shape, required=True)
    p.add_argument("--window", type=float, required=True)
    p.add_argument("--n-windows", type=int, default=None)
    p.add_argument("--centering", choices=["empirical", "none", "true_mean_zero"], default="empirical")
    p.add_argument("--target", default=None, help="target density matrix JSON")
    p.set_defaults(func=cmd_ingest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, IngestError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DegenerateEstimateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
