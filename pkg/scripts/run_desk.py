#!/usr/bin/env python3
"""Run the desk-scale benchmark plans and write CSV plus markdown tables.

Each desk plan is one hard cell with five replicates per lambda and takes a
few minutes on a single core. Outputs land in results/ by default, named
after the plan file.
"""

from __future__ import annotations

import argparse
import pathlib

from dcopt.bench import parse_plan, render_table, run_benchmark

DESK_PLANS = ("desk-l1l2.plan", "desk-log.plan")


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--plans", nargs="*", metavar="FILE",
                    help="plan files to run (default: the two desk plans)")
    ap.add_argument("--out-dir", type=pathlib.Path, default=pathlib.Path("results"))
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)

    plan_dir = pathlib.Path(__file__).resolve().parent / "plans"
    if args.plans:
        paths = [pathlib.Path(p) for p in args.plans]
    else:
        paths = [plan_dir / name for name in DESK_PLANS]

    args.out_dir.mkdir(parents=True, exist_ok=True)
    for path in paths:
        plan = parse_plan(path.read_text())
        cells = len(plan.grid) * len(plan.lambdas)
        print(f"{path.name}: {cells} cell(s) x {plan.instances_per_cell} replicates, "
              f"solvers {', '.join(plan.solvers)}", flush=True)
        table = run_benchmark(plan, jobs=args.jobs)
        base = args.out_dir / path.stem
        base.with_suffix(".csv").write_text(render_table(table, fmt="csv") + "\n")
        base.with_suffix(".md").write_text(render_table(table, fmt="markdown") + "\n")
        print(f"  wrote {base}.csv and {base}.md", flush=True)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
