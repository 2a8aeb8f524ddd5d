"""Merit function, per-iteration descent audit, and a stationarity residual.

The merit function E(x, y) = F(x) + (L/2)||x - y||^2 decreases along pdca
iterates by at least (L/2)(1 - beta_t^2) ||x^t - x^{t-1}||^2 per step; the
audit replays a solve's traces against that inequality. The residual measures
distance from being a fixed point of the prox-gradient map with the same
subgradient selection the solvers use, so residual 0 is exactly stationarity
under that selection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instances import ProblemInstance, objective, smooth_eval
from .regularizers import RegularizerSpec, p1_prox, p2_subgrad
from .solvers import SolveResult


@dataclass(frozen=True)
class DescentReport:
    violations: int
    max_violation: float
    monotone: bool


def merit_E(
    inst: ProblemInstance,
    spec: RegularizerSpec,
    x: np.ndarray,
    x_prev: np.ndarray,
    L: float,
) -> float:
    """E(x, x_prev) = F(x) + (L/2) ||x - x_prev||^2."""
    x = np.asarray(x, dtype=np.float64)
    x_prev = np.asarray(x_prev, dtype=np.float64)
    if x.shape != x_prev.shape:
        raise ValueError("x and x_prev must have the same shape")
    diff = x - x_prev
    return objective(inst, spec, x) + 0.5 * L * float(diff @ diff)


def check_descent(result: SolveResult, L: float) -> DescentReport:
    """Replay a pdca_e/pdca run's traces against the per-step descent bound.

    Checks E_t - E_{t+1} >= (L/2)(1 - beta_t^2) * ||x^t - x^{t-1}||^2 for
    every step, with slack 1e-8 * max(1, |E_0|). beta_trace may be None (a
    pdca run), in which case betas are identically zero. The incoming step at
    t = 0 is zero because x^0 = x^{-1}.
    """
    if result.merit_trace is None or result.step_norm_trace is None:
        raise ValueError("check_descent needs merit and step-norm traces")
    merit = np.asarray(result.merit_trace, dtype=np.float64)
    steps = np.asarray(result.step_norm_trace, dtype=np.float64)
    T = result.iterations
    if merit.size != T + 1 or steps.size != T:
        raise ValueError(
            f"trace lengths ({merit.size}, {steps.size}) inconsistent with iterations={T}"
        )
    if result.beta_trace is None:
        betas = np.zeros(T)
    else:
        betas = np.asarray(result.beta_trace, dtype=np.float64)
        if betas.size != T:
            raise ValueError(f"beta trace length {betas.size} inconsistent with iterations={T}")

    slack = 1e-8 * max(1.0, abs(float(merit[0])) if merit.size else 1.0)
    violations = 0
    max_shortfall = 0.0
    monotone = True
    for t in range(T):
        lhs = float(merit[t] - merit[t + 1])
        step_in = float(steps[t - 1]) if t >= 1 else 0.0
        rhs = 0.5 * L * (1.0 - float(betas[t]) ** 2) * step_in**2
        shortfall = rhs - lhs
        if shortfall > slack:
            violations += 1
        max_shortfall = max(max_shortfall, shortfall)
        if merit[t + 1] > merit[t] + slack:
            monotone = False
    return DescentReport(violations, max(0.0, max_shortfall), monotone)


def stationarity_residual(
    inst: ProblemInstance,
    spec: RegularizerSpec,
    x: np.ndarray,
    L: float,
) -> float:
    """||x - prox step at x|| / max(1, ||x||) with the solver's subgradient choice.

    The map is p1_prox(x - (1/L)(grad f(x) - xi), 1/L) with xi = p2_subgrad(x);
    the value is 0 exactly when x is a fixed point of the iterate map, which
    implies stationarity of the DC objective.
    """
    if L <= 0:
        raise ValueError("L must be positive")
    x = np.asarray(x, dtype=np.float64)
    grad = smooth_eval(inst, x).gradient
    xi = p2_subgrad(spec, x)
    mapped = p1_prox(spec, x - (grad - xi) / L, 1.0 / L)
    return float(np.linalg.norm(x - mapped)) / max(1.0, float(np.linalg.norm(x)))
