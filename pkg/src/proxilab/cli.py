"""Command-line runner.

    proxilab run <scenario> [--out DIR] [--seed N] [--iters N] [--no-plots]
    proxilab sweep [--out DIR] [...grid options]
    proxilab scenarios

Exit codes: 0 when every configured check passes, 2 on a check failure,
1 on a parse/validation/runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .errors import ProxilabError
from .impulsive import stability_sweep
from .report import execute, write_sweep_csv
from .scenario import bundled_scenario_names


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="proxilab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario and emit its report artifacts")
    run.add_argument("scenario", help="path to a scenario JSON file, or a bundled scenario name")
    run.add_argument("--out", type=Path, default=None, help="output directory (default: next to the input)")
    run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run.add_argument("--iters", type=int, default=None, help="override the orbit length")
    run.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    sweep = sub.add_parser("sweep", help="impulsive stability sweep over (a, lambda_1, lambda_2)")
    sweep.add_argument("--out", type=Path, default=Path.cwd(), help="output directory")
    sweep.add_argument("--grid", type=int, default=10, help="points per axis")
    sweep.add_argument("--a-min", type=float, default=0.1)
    sweep.add_argument("--a-max", type=float, default=1.0)
    sweep.add_argument("--lam-min", type=float, default=0.1)
    sweep.add_argument("--lam-max", type=float, default=2.0)
    sweep.add_argument("--gap", type=float, default=2.0, help="target gap between the regions")
    sweep.add_argument("--halfwidth", type=float, default=1.0)
    sweep.add_argument("--iters", type=int, default=3000)
    sweep.add_argument("--no-plots", action="store_true")

    sub.add_parser("scenarios", help="list the bundled scenarios")
    return parser


def _cmd_run(args) -> int:
    report, code, paths = execute(
        args.scenario,
        out_dir=args.out,
        seed=args.seed,
        iters=args.iters,
        plots=not args.no_plots,
    )
    for name, outcome in sorted(report.checks.items()):
        status = "pass" if outcome["pass"] else "FAIL"
        print(f"check {name}: {status}")
    print(f"report: {paths['report']}")
    return code


def _cmd_sweep(args) -> int:
    a_values = [float(v) for v in np.linspace(args.a_min, args.a_max, args.grid)]
    lam_values = [float(v) for v in np.linspace(args.lam_min, args.lam_max, args.grid)]
    rows = stability_sweep(
        a_values,
        lam_values,
        lam_values,
        target_gap=args.gap,
        halfwidth=args.halfwidth,
        N=args.iters,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "stability_grid.csv"
    write_sweep_csv(rows, csv_path)
    judged = [r for r in rows if r["agrees"] is not None]
    disagreements = [r for r in judged if not r["agrees"]]
    escapes = sum(1 for r in rows if r["verdict"] == "escape")
    print(f"cells: {len(rows)}  escapes: {escapes}  judged: {len(judged)}  disagreements: {len(disagreements)}")
    print(f"grid: {csv_path}")
    if not args.no_plots:
        from .figures import render_sweep_figure

        fig_path = out_dir / "stability_grid.png"
        render_sweep_figure(rows, a_values, lam_values, lam_values, fig_path)
        print(f"figure: {fig_path}")
    return 0 if not disagreements else 2


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "scenarios":
            for name in bundled_scenario_names():
                print(name)
            return 0
    except ProxilabError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
