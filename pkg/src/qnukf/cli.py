"""``qnukf`` command line: simulate, run, evaluate, compare.

Exit status is 0 on success, 1 when a command fails and 2 on usage errors.
``NAV_LOG`` (error, warn, info, debug) sets the log level.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_run_config, load_sim_config
from .dataio import read_dataset, read_diagnostics, read_states_csv, write_dataset, write_json, write_run_output
from .errors import IoError, MisalignedSeries, NavError
from .metrics import compute_metrics
from .pipeline import FILTERS, run_dataset, simulate_dataset, write_run

log = logging.getLogger("qnukf")

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging() -> None:
    level = LOG_LEVELS.get(os.environ.get("NAV_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


class UsageError(Exception):
    pass


def _config(args) -> RunConfig:
    """Load ``--config`` and fill missing ``--dataset``/``--out`` from it."""
    cfg = RunConfig() if args.config is None else load_run_config(args.config)
    for key in ("dataset", "out"):
        if getattr(args, key, "") is None:
            if not getattr(cfg, key):
                raise UsageError(f"--{key} is required (or set '{key}' in the config file)")
            setattr(args, key, getattr(cfg, key))
    return cfg


def cmd_simulate(args) -> int:
    sim = load_sim_config(args.spec)
    ds = simulate_dataset(sim, args.seed)
    write_dataset(args.out, ds)
    print(f"wrote {len(ds.imu)} IMU samples and {len(ds.frames)} frames to {args.out}")
    return 0


def cmd_run(args) -> int:
    cfg = _config(args)
    ds = read_dataset(args.dataset)
    res = run_dataset(ds, args.filter, cfg)
    summary = write_run(args.out, args.filter, ds, res, with_metrics=False)
    print(f"{args.filter}: {res.n_predict} predictions, {res.n_update} updates")
    if "max_p_err" in summary:
        print(f"max position error {summary['max_p_err']:.3e} m, max attitude error {summary['max_r_err']:.3e} rad")
    return 0


def cmd_evaluate(args) -> int:
    run = Path(args.run)
    t, X = read_states_csv(run / "estimates.csv")
    truth_t, truth = read_states_csv(args.truth)
    trace_P = None
    if (run / "diagnostics.csv").exists():
        diag = read_diagnostics(run / "diagnostics.csv")
        if [d[0] for d in diag] != t.tolist():
            raise MisalignedSeries("diagnostics.csv and estimates.csv timestamps differ")
        trace_P = np.array([d[4] for d in diag])
    m = compute_metrics(t, X, truth_t, truth)
    write_run_output(run, m, trace_P)
    print(f"rmse {m.rmse:.6f}  ssrmse {m.ssrmse:.6f}  steps {m.steps}")
    return 0


def format_table(rows: list[dict]) -> str:
    head = ("filter", "rmse", "ssrmse")
    cells = [head] + [(r["filter"], f"{r['rmse']:.6f}", f"{r['ssrmse']:.6f}") for r in rows]
    widths = [max(len(c[i]) for c in cells) for i in range(3)]
    lines = ["  ".join(c[i].ljust(widths[i]) if i == 0 else c[i].rjust(widths[i]) for i in range(3)) for c in cells]
    return "\n".join(lines) + "\n"


def cmd_compare(args) -> int:
    cfg = _config(args)
    ds = read_dataset(args.dataset)
    if ds.truth is None:
        raise IoError(f"{args.dataset} has no truth.csv to compare against")
    out = Path(args.out)
    rows = []
    for name in ("ekf", "qnukf"):
        res = run_dataset(ds, name, cfg)
        summary = write_run(out / name, name, ds, res)
        rows.append({"filter": name, **summary["metrics"]})
    write_json(out / "comparison.json", {"rows": rows})
    table = format_table(rows)
    with open(out / "comparison.txt", "w") as fh:
        fh.write(table)
    print(table, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qnukf", description="Quaternion UKF visual-inertial navigation toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="synthesize a dataset")
    s.add_argument("--spec", required=True, help="simulation spec file (key = value)")
    s.add_argument("--out", required=True, help="output dataset directory")
    s.add_argument("--seed", type=int, default=None, help="override the spec seed")
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("run", help="run one filter over a dataset")
    r.add_argument("--dataset", default=None)
    r.add_argument("--filter", choices=FILTERS, default="qnukf")
    r.add_argument("--config", default=None, help="run config file (key = value)")
    r.add_argument("--out", default=None)
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("evaluate", help="score a run against truth")
    e.add_argument("--run", required=True, help="directory holding estimates.csv")
    e.add_argument("--truth", required=True, help="truth CSV in the EuRoC state layout")
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("compare", help="run EKF and QNUKF with one config and tabulate")
    c.add_argument("--dataset", default=None)
    c.add_argument("--config", default=None)
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_compare)
    return p


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and not Path(args.spec).is_file():
        parser.error(f"spec file {args.spec} not found")
    if getattr(args, "config", None) is not None and not Path(args.config).is_file():
        parser.error(f"config file {args.config} not found")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (NavError, OSError, ValueError) as exc:
        print(f"qnukf {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
