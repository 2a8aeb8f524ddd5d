"""Command-line driver: instance generation, single solves, benchmark plans.

Exit codes: 0 success, 2 invariant violation (descent audit or weight
admissibility) or unusable input, 3 solver abort.
"""

from __future__ import annotations

import argparse
import sys

from .bench import InvariantViolation, parse_plan, render_table, run_benchmark
from .diagnostics import stationarity_residual
from .instances import generate_instance, load_instance, objective, save_instance
from .linalg import lmax_gram
from .regularizers import parse_reg
from .solvers import SolveResult, SolverConfig, solve


def _cmd_gen(args: argparse.Namespace) -> int:
    inst = generate_instance(args.m, args.n, args.s, noise_scale=args.noise, seed=args.seed)
    out = args.out or f"instance-m{args.m}-n{args.n}-s{args.s}-seed{args.seed}.dcin"
    save_instance(inst, out)
    print(out)
    return 0


def _write_trace(path: str, res: SolveResult) -> None:
    # row t carries x^t's objective and merit, the step into x^t, and the
    # extrapolation weight used at t (which produced x^{t+1})
    obj = res.objective_trace
    merit = res.merit_trace
    steps = res.step_norm_trace
    betas = res.beta_trace
    with open(path, "w") as fh:
        fh.write("t,F,E,step_norm,beta\n")
        for t in range(res.iterations + 1):
            f_cell = repr(float(obj[t])) if obj is not None else ""
            e_cell = repr(float(merit[t])) if merit is not None else ""
            s_cell = repr(float(steps[t - 1])) if t >= 1 else ""
            b_cell = repr(float(betas[t])) if betas is not None and t < res.iterations else ""
            fh.write(f"{t},{f_cell},{e_cell},{s_cell},{b_cell}\n")


def _cmd_solve(args: argparse.Namespace) -> int:
    inst = load_instance(args.instance)
    spec = parse_reg(args.reg)
    cfg = SolverConfig(
        algorithm=args.solver,
        tol=args.tol,
        max_iter=args.max_iter,
        restart_period=args.restart if args.restart > 0 else None,
        adaptive_restart=False if args.no_adaptive else None,
        trace=True,
    )
    est = lmax_gram(inst.A)
    if not est.converged:
        print("warning: lmax_gram did not converge; using best estimate", file=sys.stderr)
    if args.solver in ("pdca_e", "pdca"):
        cfg.L_override = est.value
    res = solve(inst, spec, cfg)
    fval = objective(inst, spec, res.x_final)
    residual = stationarity_residual(inst, spec, res.x_final, est.value)
    print(f"{res.iterations},{res.status},{fval:.4e},{residual:.4e}")
    if args.trace:
        _write_trace(args.trace, res)
    if res.status == "aborted":
        print(f"solver aborted: {res.message}", file=sys.stderr)
        return 3
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    with open(args.plan) as fh:
        plan = parse_plan(fh.read())
    try:
        table = run_benchmark(plan, jobs=args.jobs)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2
    with open(args.out_csv, "w") as fh:
        fh.write(render_table(table, "csv") + "\n")
    print(args.out_csv)
    if args.out_md:
        with open(args.out_md, "w") as fh:
            fh.write(render_table(table, "markdown") + "\n")
        print(args.out_md)
    rc = 0
    for rec in table.records:
        if not rec.admissible:
            print(
                f"inadmissible weight: lam={rec.lam:g} vs bound {rec.lambda_bound:.6g} "
                f"on ({rec.m},{rec.n},{rec.s}) rep {rec.replicate}",
                file=sys.stderr,
            )
            rc = 2
    if rc == 0:
        for rec in table.records:
            if rec.status == "aborted":
                print(
                    f"solver abort: {rec.solver} on ({rec.m},{rec.n},{rec.s}) "
                    f"rep {rec.replicate}: {rec.message}",
                    file=sys.stderr,
                )
                rc = 3
    return rc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcopt",
        description="DC-regularized least squares: generate instances, solve, benchmark.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="write a problem-instance container")
    gen.add_argument("--m", type=int, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--s", type=int, required=True)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--noise", type=float, default=0.01)
    gen.add_argument("--out", default=None)
    gen.set_defaults(func=_cmd_gen)

    slv = sub.add_parser("solve", help="run one solver on a stored instance")
    slv.add_argument("--instance", required=True)
    slv.add_argument("--reg", required=True, help="e.g. l1-l2:lambda=5e-4 or log:lambda=1e-3,eps=0.5")
    slv.add_argument("--solver", required=True, choices=("pdca_e", "pdca", "gist"))
    slv.add_argument("--tol", type=float, default=1e-5)
    slv.add_argument("--max-iter", type=int, default=5000)
    slv.add_argument("--restart", type=int, default=200, help="fixed restart period; 0 disables")
    slv.add_argument("--no-adaptive", action="store_true")
    slv.add_argument("--trace", default=None, help="write per-iteration t,F,E,step_norm,beta CSV")
    slv.set_defaults(func=_cmd_solve)

    ben = sub.add_parser("bench", help="run a benchmark plan")
    ben.add_argument("--plan", required=True)
    ben.add_argument("--out-csv", required=True)
    ben.add_argument("--out-md", default=None)
    ben.add_argument("--jobs", type=int, default=1)
    ben.set_defaults(func=_cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        # malformed plan/reg/container or unreadable path: usage-level failure
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
