"""Benchmark plans, the instance-grid runner, and table rendering.

A plan names a grid of (m, n, s) cells, a regularizer family with fixed
parameters, a list of weights, solvers, and a replicate count. Instances are
seeded by a stable hash of (master_seed, m, n, s, replicate), so they are
shared across weights within a cell and adding a weight never reshuffles
them. Every pdca_e/pdca run is audited against the descent inequality, and
every l1-l2 run is checked for weight admissibility.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .diagnostics import check_descent, stationarity_residual
from .instances import generate_instance, l12_lambda_bound, objective
from .linalg import combine_seed, lmax_gram
from .regularizers import make_spec, parse_reg_family
from .solvers import SolverConfig, solve

_SOLVER_NAMES = ("gist", "pdca_e", "pdca")


class InvariantViolation(RuntimeError):
    """A benchmark run violated a checked invariant."""


@dataclass
class BenchmarkPlan:
    grid: list[tuple[int, int, int]]
    lambdas: list[float]
    reg_family: str
    reg_params: dict[str, float] = field(default_factory=dict)
    solvers: list[str] = field(default_factory=lambda: list(_SOLVER_NAMES))
    instances_per_cell: int = 30
    master_seed: int = 0
    trace: bool = False

    def __post_init__(self):
        if not self.grid:
            raise ValueError("plan grid must be nonempty")
        if not self.lambdas:
            raise ValueError("plan needs at least one lambda")
        if self.instances_per_cell < 1:
            raise ValueError("instances_per_cell must be >= 1")
        for name in self.solvers:
            if name not in _SOLVER_NAMES:
                raise ValueError(f"unknown solver {name!r}")
        if not self.solvers:
            raise ValueError("plan needs at least one solver")
        # fail fast on a malformed family/params combination
        make_spec(self.reg_family, **{"lambda": self.lambdas[0], **self.reg_params})


_BOOLS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}

_PLAN_KEYS = ("grid", "lambdas", "reg", "solvers", "instances", "seed", "trace")


def parse_plan(text: str) -> BenchmarkPlan:
    """Parse the flat key-value plan format ('key = value', '#' comments)."""
    kv: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed plan line {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip().lower()
        if key not in _PLAN_KEYS:
            raise ValueError(f"unknown plan key {key!r}; known: {_PLAN_KEYS}")
        if key in kv:
            raise ValueError(f"duplicate plan key {key!r}")
        kv[key] = val.strip()

    missing = [k for k in _PLAN_KEYS if k != "trace" and k not in kv]
    if missing:
        raise ValueError(f"plan missing keys {missing}")

    grid = []
    for tok in kv["grid"].replace(";", " ").split():
        parts = tok.lower().split("x")
        if len(parts) != 3:
            raise ValueError(f"grid entry {tok!r} is not of the form MxNxS")
        grid.append(tuple(int(p) for p in parts))

    lambdas = [float(tok) for tok in kv["lambdas"].replace(",", " ").split()]
    family, params = parse_reg_family(kv["reg"])
    if "lambda" in params:
        raise ValueError("plan reg must not fix lambda; use the lambdas key")
    solvers = kv["solvers"].replace(",", " ").split()

    trace = False
    if "trace" in kv:
        val = kv["trace"].lower()
        if val not in _BOOLS:
            raise ValueError(f"trace must be a boolean, got {kv['trace']!r}")
        trace = _BOOLS[val]

    return BenchmarkPlan(
        grid=grid,
        lambdas=lambdas,
        reg_family=family,
        reg_params=params,
        solvers=solvers,
        instances_per_cell=int(kv["instances"]),
        master_seed=int(kv["seed"]),
        trace=trace,
    )


@dataclass(frozen=True)
class RunRecord:
    m: int
    n: int
    s: int
    lam: float
    replicate: int
    seed: int
    solver: str
    iterations: int
    status: str
    fval: float
    residual: float
    wall_seconds: float
    t_lmax: float
    lambda_bound: float | None
    admissible: bool
    message: str = ""


@dataclass(frozen=True)
class CellStats:
    iter_mean: float
    cap_fraction: float
    cpu_mean: float
    fval_mean: float


@dataclass(frozen=True)
class CellRow:
    m: int
    n: int
    s: int
    lam: float
    t_lmax_mean: float
    stats: dict[str, CellStats]


@dataclass
class ResultTable:
    rows: list[CellRow]
    records: list[RunRecord]

    @property
    def any_aborted(self) -> bool:
        return any(r.status == "aborted" for r in self.records)

    @property
    def any_inadmissible(self) -> bool:
        return any(not r.admissible for r in self.records)


def replicate_seed(master_seed: int, m: int, n: int, s: int, replicate: int) -> int:
    """Stable instance seed; independent of the weight by construction."""
    return combine_seed(master_seed, m, n, s, replicate)


def _run_cell_replicate(
    plan: BenchmarkPlan, cell: tuple[int, int, int], replicate: int
) -> list[RunRecord]:
    m, n, s = cell
    seed = replicate_seed(plan.master_seed, m, n, s, replicate)
    inst = generate_instance(m, n, s, noise_scale=0.01, seed=seed)

    t0 = time.perf_counter()
    est = lmax_gram(inst.A)
    t_lmax = time.perf_counter() - t0
    if not est.converged:
        raise InvariantViolation(f"lmax_gram failed to converge on cell {cell} rep {replicate}")
    L = est.value

    records: list[RunRecord] = []
    for lam in plan.lambdas:
        spec = make_spec(plan.reg_family, **{"lambda": lam, **plan.reg_params})
        bound = l12_lambda_bound(inst) if plan.reg_family == "l1-l2" else None
        admissible = bound > lam if bound is not None else True
        for solver_name in plan.solvers:
            cfg = SolverConfig(algorithm=solver_name, L_override=L, trace=plan.trace)
            res = solve(inst, spec, cfg)
            if solver_name in ("pdca_e", "pdca"):
                audit = check_descent(res, L)
                if audit.violations > 0:
                    raise InvariantViolation(
                        f"descent inequality violated {audit.violations} times "
                        f"(max shortfall {audit.max_violation:.3e}) by {solver_name} "
                        f"on cell {cell} rep {replicate} lam {lam:g}"
                    )
            records.append(
                RunRecord(
                    m=m,
                    n=n,
                    s=s,
                    lam=lam,
                    replicate=replicate,
                    seed=seed,
                    solver=solver_name,
                    iterations=res.iterations,
                    status=res.status,
                    fval=objective(inst, spec, res.x_final),
                    residual=stationarity_residual(inst, spec, res.x_final, L),
                    wall_seconds=res.wall_seconds,
                    t_lmax=t_lmax,
                    lambda_bound=bound,
                    admissible=admissible,
                    message=res.message,
                )
            )
    return records


def run_benchmark(plan: BenchmarkPlan, jobs: int = 1) -> ResultTable:
    """Run every (cell, replicate, lambda, solver) combination and aggregate.

    Instances and their L are computed once per (cell, replicate) and shared
    across lambdas and solvers; solver wall times therefore never include the
    L computation, which is reported separately as t_lmax. A descent-audit
    failure raises InvariantViolation immediately; aborted solves and
    inadmissible weights are flagged on the records and surfaced by the CLI.
    """
    units = [(cell, rep) for cell in plan.grid for rep in range(plan.instances_per_cell)]
    batches: list[list[RunRecord]]
    if jobs <= 1:
        batches = [_run_cell_replicate(plan, cell, rep) for cell, rep in units]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_cell_replicate, plan, cell, rep) for cell, rep in units]
            batches = [f.result() for f in futures]

    records = [rec for batch in batches for rec in batch]

    rows: list[CellRow] = []
    for cell in plan.grid:
        m, n, s = cell
        cell_recs = [r for r in records if (r.m, r.n, r.s) == cell]
        per_rep_lmax = {r.replicate: r.t_lmax for r in cell_recs}
        t_lmax_mean = sum(per_rep_lmax.values()) / len(per_rep_lmax)
        for lam in plan.lambdas:
            stats: dict[str, CellStats] = {}
            for solver_name in plan.solvers:
                runs = [r for r in cell_recs if r.lam == lam and r.solver == solver_name]
                count = len(runs)
                stats[solver_name] = CellStats(
                    iter_mean=sum(r.iterations for r in runs) / count,
                    cap_fraction=sum(r.status == "iteration_cap" for r in runs) / count,
                    cpu_mean=sum(r.wall_seconds for r in runs) / count,
                    fval_mean=sum(r.fval for r in runs) / count,
                )
            rows.append(CellRow(m=m, n=n, s=s, lam=lam, t_lmax_mean=t_lmax_mean, stats=stats))
    return ResultTable(rows=rows, records=records)


_CSV_HEADER = (
    "n,m,s,t_lmax,iter_gist,iter_pdcae,iter_pdca,"
    "cpu_gist,cpu_pdcae,cpu_pdca,fval_gist,fval_pdcae,fval_pdca"
)
_COLUMN_SOLVERS = ("gist", "pdca_e", "pdca")


def _row_cells(row: CellRow) -> list[str]:
    def fmt_iter(st: CellStats) -> str:
        return "max" if st.cap_fraction == 1.0 else f"{st.iter_mean:.0f}"

    cells = [str(row.n), str(row.m), str(row.s), f"{row.t_lmax_mean:.3f}"]
    for name in _COLUMN_SOLVERS:
        cells.append(fmt_iter(row.stats[name]) if name in row.stats else "")
    for name in _COLUMN_SOLVERS:
        cells.append(f"{row.stats[name].cpu_mean:.3f}" if name in row.stats else "")
    for name in _COLUMN_SOLVERS:
        cells.append(f"{row.stats[name].fval_mean:.4e}" if name in row.stats else "")
    return cells


def render_table(table: ResultTable, fmt: str = "csv") -> str:
    """Render the aggregated table as csv or markdown (same columns)."""
    if not table.rows:
        raise ValueError("cannot render an empty table")
    if fmt == "csv":
        lines = [_CSV_HEADER]
        lines.extend(",".join(_row_cells(row)) for row in table.rows)
        return "\n".join(lines)
    if fmt == "markdown":
        header = _CSV_HEADER.split(",")
        lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        lines.extend("| " + " | ".join(_row_cells(row)) + " |" for row in table.rows)
        return "\n".join(lines)
    raise ValueError(f"unknown format {fmt!r}")


def nontiming_fingerprint(table: ResultTable) -> str:
    """Canonical text of everything except wall-clock columns.

    Two runs of the same plan with the same master seed must produce equal
    fingerprints; floats are rendered with repr for exact round-tripping.
    """
    lines = []
    for r in sorted(table.records, key=lambda r: (r.m, r.n, r.s, r.lam, r.replicate, r.solver)):
        lines.append(
            f"rec,{r.m},{r.n},{r.s},{r.lam!r},{r.replicate},{r.seed},{r.solver},"
            f"{r.iterations},{r.status},{r.fval!r},{r.residual!r},"
            f"{r.lambda_bound!r},{r.admissible},{r.message}"
        )
    for row in table.rows:
        for name in sorted(row.stats):
            st = row.stats[name]
            lines.append(
                f"row,{row.m},{row.n},{row.s},{row.lam!r},{name},"
                f"{st.iter_mean!r},{st.cap_fraction!r},{st.fval_mean!r}"
            )
    return "\n".join(lines)
