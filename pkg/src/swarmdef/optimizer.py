"""Defender trajectory optimization over Bernstein control points.

Minimizes 1 - (final HVU survival) subject to control-magnitude and
pairwise-separation constraints, handled by a quadratic exterior penalty
with growing weight. The first control point of every defender is pinned
to its initial position and excluded from the decision vector; remaining
coordinates are scaled by the scenario's spatial extent (rounded to a
power of two, so scaling is exact) before search.

Three inner search modes are available: forward finite differences with a
backtracking line search (default; the weighted models are smooth),
simultaneous-perturbation stochastic gradient, and a derivative-free
coordinate pattern search, which is the recommended mode for the
threshold model whose objective is piecewise constant between removal
pattern changes.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO

import numpy as np

from .bernstein import ControlPoints
from .engagement import Model, constraint_residuals, propagate
from .errors import ConfigurationError, ScenarioError
from .parallel import parallel_map
from .scenario import ScenarioConfig

FEASIBILITY_TOL = 1e-3

_MODE_ALIASES = {
    "finite-difference": "finite-difference",
    "simultaneous-perturbation": "simultaneous-perturbation",
    "pattern": "pattern",
    "derivative-free-pattern": "pattern",
}


@dataclass
class OptimizerOptions:
    """Search and penalty-continuation settings."""

    max_iterations: int = 60          # inner iterations per penalty stage
    gradient_mode: str = "finite-difference"
    fd_step: float = 1e-4             # relative forward-difference step
    penalty_initial: float = 10.0
    penalty_growth: float = 10.0
    penalty_max: float = 1e6
    convergence_tol: float = 1e-6     # absolute decrease of the penalized objective
    step_seed: int = 0

    def __post_init__(self):
        if self.gradient_mode not in _MODE_ALIASES:
            raise ConfigurationError(
                f"unknown gradient_mode {self.gradient_mode!r}; expected one of "
                f"{sorted(set(_MODE_ALIASES))}")
        self.gradient_mode = _MODE_ALIASES[self.gradient_mode]
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be >= 1")
        if self.fd_step <= 0:
            raise ConfigurationError("fd_step must be > 0")
        if self.penalty_initial <= 0:
            raise ConfigurationError("penalty_initial must be > 0")
        if self.penalty_growth <= 1:
            raise ConfigurationError("penalty_growth must be > 1")
        if self.penalty_max < self.penalty_initial:
            raise ConfigurationError("penalty_max must be >= penalty_initial")
        if self.convergence_tol <= 0:
            raise ConfigurationError("convergence_tol must be > 0")


@dataclass
class IterateRecord:
    """Scalars of one accepted iterate."""

    mu: float
    penalized: float
    cost: float
    control_violation: float
    separation_violation: float
    step_norm: float


@dataclass
class OptimizationTrace:
    """Accepted iterates, the returned control points, and evaluation counts."""

    iterates: list[IterateRecord] = field(default_factory=list)
    best_cp: ControlPoints | None = None
    evaluations: int = 0
    feasible: bool = False            # best iterate within FEASIBILITY_TOL
    best_cost: float = math.inf
    best_control_violation: float = math.inf
    best_separation_violation: float = math.inf


def initialize_control_points(cfg: ScenarioConfig, strategy: str) -> ControlPoints:
    """Initial guess with the first control point pinned to each start position.

    ``hold`` parks every control point at the initial position (zero
    control everywhere). ``radial-picket`` fans terminal points across an
    arc of radius s0 around the HVU facing the attacker centroid.
    ``line-to-threat`` aims each defender straight at the attacker
    centroid. Non-terminal points interpolate linearly, so initial guesses
    are straight constant-speed paths.
    """
    L = cfg.bernstein_order
    m = cfg.n_defenders
    start = cfg.initial_defenders[:, 0]
    points = np.repeat(start[:, None, :], L + 1, axis=1)

    if strategy == "hold":
        return ControlPoints(points, L, cfg.t_f)

    centroid = cfg.initial_attackers[:, 0].mean(axis=0)
    if strategy == "line-to-threat":
        terminal = np.repeat(centroid[None, :], m, axis=0)
    elif strategy == "radial-picket":
        axis = centroid - cfg.hvu_position
        norm = np.linalg.norm(axis)
        axis = axis / norm if norm > 0 else np.array([1.0, 0.0, 0.0])
        helper = np.array([0.0, 0.0, 1.0])
        if abs(np.dot(helper, axis)) > 0.9:
            helper = np.array([1.0, 0.0, 0.0])
        side = np.cross(helper, axis)
        side /= np.linalg.norm(side)
        angles = -np.pi / 2 + np.pi * (np.arange(m) + 0.5) / m
        terminal = cfg.hvu_position[None, :] + cfg.s0 * (
            np.cos(angles)[:, None] * axis[None, :]
            + np.sin(angles)[:, None] * side[None, :])
    else:
        raise ConfigurationError(
            f"unknown initialization strategy {strategy!r}; expected "
            "hold, radial-picket, or line-to-threat")

    frac = (np.arange(L + 1) / L)[None, :, None]
    points = start[:, None, :] * (1.0 - frac) + terminal[:, None, :] * frac
    points[:, 0, :] = start
    return ControlPoints(points, L, cfg.t_f)


def _evaluate(model: Model, cfg: ScenarioConfig, cp: ControlPoints,
              mu: float) -> tuple[float, float, float, float]:
    """(penalized, cost, control_violation, separation_violation)."""
    cost = propagate(model, cfg, cp).cost
    cv, sv = constraint_residuals(cfg, cp)
    return cost + mu * (cv * cv + sv * sv), cost, cv, sv


def penalized_objective(model: Model, cfg: ScenarioConfig, cp: ControlPoints,
                        mu: float) -> float:
    """Raw engagement cost plus mu times the squared constraint violations."""
    if mu < 0:
        raise ValueError("penalty weight must be >= 0")
    return _evaluate(model, cfg, cp, mu)[0]


def _spatial_scale(cfg: ScenarioConfig) -> float:
    """Largest initial pairwise distance, rounded to a power of two.

    Power-of-two scaling makes the scale/unscale round trip exact, so
    coordinates the search never touches stay bit-identical.
    """
    pts = np.vstack([cfg.initial_attackers[:, 0], cfg.initial_defenders[:, 0],
                     cfg.hvu_position[None, :]])
    diff = pts[:, None, :] - pts[None, :, :]
    extent = float(np.linalg.norm(diff, axis=2).max())
    if extent <= 0:
        return 1.0
    return 2.0 ** round(math.log2(extent))


def _rebuild(first_points: np.ndarray, x: np.ndarray, scale: float,
             order: int, horizon: float) -> ControlPoints:
    m = first_points.shape[0]
    free = (x * scale).reshape(m, order, 3)
    points = np.concatenate([first_points[:, None, :], free], axis=1)
    return ControlPoints(points, order, horizon)


def _objective_from_vector(model: Model, cfg: ScenarioConfig,
                           first_points: np.ndarray, scale: float,
                           order: int, horizon: float, mu: float,
                           x: np.ndarray) -> float:
    return _evaluate(model, cfg, _rebuild(first_points, x, scale, order, horizon),
                     mu)[0]


class _Search:
    """Shared bookkeeping for one optimize() call."""

    def __init__(self, model: Model, cfg: ScenarioConfig, init_cp: ControlPoints,
                 opts: OptimizerOptions):
        self.model = model
        self.cfg = cfg
        self.opts = opts
        self.order = init_cp.order
        self.horizon = init_cp.horizon
        self.first_points = init_cp.points[:, 0, :].copy()
        self.scale = _spatial_scale(cfg)
        self.x0 = (init_cp.points[:, 1:, :] / self.scale).ravel().copy()
        self.trace = OptimizationTrace()
        # Global best across all stages: (max violation, feasibility-aware key)
        self.best_x = self.x0.copy()
        self.best_cost = math.inf
        self.best_cv = math.inf
        self.best_sv = math.inf

    def cp(self, x: np.ndarray) -> ControlPoints:
        return _rebuild(self.first_points, x, self.scale, self.order, self.horizon)

    def evaluate(self, x: np.ndarray, mu: float) -> tuple[float, float, float, float]:
        self.trace.evaluations += 1
        return _evaluate(self.model, self.cfg, self.cp(x), mu)

    def evaluate_batch(self, xs: list[np.ndarray], mu: float) -> list[float]:
        self.trace.evaluations += len(xs)
        fn = functools.partial(_objective_from_vector, self.model, self.cfg,
                               self.first_points, self.scale, self.order,
                               self.horizon, mu)
        return parallel_map(fn, xs)

    def consider(self, x: np.ndarray, cost: float, cv: float, sv: float) -> None:
        """Keep the best feasible iterate, or the least infeasible one."""
        viol = max(cv, sv)
        best_viol = max(self.best_cv, self.best_sv)
        if viol <= FEASIBILITY_TOL:
            better = (best_viol > FEASIBILITY_TOL) or (cost < self.best_cost)
        else:
            better = best_viol > FEASIBILITY_TOL and viol < best_viol
        if better:
            self.best_x = x.copy()
            self.best_cost, self.best_cv, self.best_sv = cost, cv, sv

    def record(self, mu: float, pen: float, cost: float, cv: float, sv: float,
               step_norm: float) -> None:
        self.trace.iterates.append(
            IterateRecord(mu, pen, cost, cv, sv, step_norm))


def _minimize_fd(search: _Search, x: np.ndarray, mu: float) -> np.ndarray:
    """Forward-difference gradient descent with Armijo backtracking."""
    opts = search.opts
    pen, cost, cv, sv = search.evaluate(x, mu)
    search.consider(x, cost, cv, sv)
    search.record(mu, pen, cost, cv, sv, 0.0)
    for _ in range(opts.max_iterations):
        steps = opts.fd_step * np.maximum(1.0, np.abs(x))
        probes = [x.copy() for _ in range(x.size)]
        for i in range(x.size):
            probes[i][i] += steps[i]
        values = search.evaluate_batch(probes, mu)
        grad = (np.asarray(values) - pen) / steps
        gnorm = float(np.linalg.norm(grad))
        if gnorm == 0.0:
            break
        direction = -grad
        slope = -gnorm * gnorm
        alpha = 1.0 / max(1.0, gnorm)
        improved = False
        for _ in range(30):
            candidate = x + alpha * direction
            cand_pen, cand_cost, cand_cv, cand_sv = search.evaluate(candidate, mu)
            if cand_pen <= pen + 1e-4 * alpha * slope:
                improved = True
                break
            alpha *= 0.5
        if not improved:
            break
        step_norm = float(np.linalg.norm(candidate - x))
        decrease = pen - cand_pen
        x, pen, cost, cv, sv = candidate, cand_pen, cand_cost, cand_cv, cand_sv
        search.consider(x, cost, cv, sv)
        search.record(mu, pen, cost, cv, sv, step_norm)
        if decrease <= opts.convergence_tol:
            break
    return x


def _minimize_spsa(search: _Search, x: np.ndarray, mu: float,
                   rng: np.random.Generator) -> np.ndarray:
    """Simultaneous-perturbation descent with best-iterate tracking."""
    opts = search.opts
    pen, cost, cv, sv = search.evaluate(x, mu)
    search.consider(x, cost, cv, sv)
    search.record(mu, pen, cost, cv, sv, 0.0)
    best_pen, best_x = pen, x.copy()
    a0, c0 = 0.1, 0.05
    stability = 0.1 * opts.max_iterations
    for k in range(opts.max_iterations):
        ak = a0 / (k + 1 + stability) ** 0.602
        ck = c0 / (k + 1) ** 0.101
        delta = rng.choice([-1.0, 1.0], size=x.size)
        f_plus = search.evaluate(x + ck * delta, mu)[0]
        f_minus = search.evaluate(x - ck * delta, mu)[0]
        grad = (f_plus - f_minus) / (2.0 * ck) * delta
        step = -ak * grad
        norm = float(np.linalg.norm(step))
        if norm > 0.5:  # scaled units; guards against wild early estimates
            step *= 0.5 / norm
        x = x + step
        pen, cost, cv, sv = search.evaluate(x, mu)
        search.consider(x, cost, cv, sv)
        if pen < best_pen - opts.convergence_tol:
            best_pen, best_x = pen, x.copy()
            search.record(mu, pen, cost, cv, sv, float(np.linalg.norm(step)))
    return best_x


def _minimize_pattern(search: _Search, x: np.ndarray, mu: float) -> np.ndarray:
    """Compass search over scaled coordinates with halving step."""
    opts = search.opts
    pen, cost, cv, sv = search.evaluate(x, mu)
    search.consider(x, cost, cv, sv)
    search.record(mu, pen, cost, cv, sv, 0.0)
    step = 0.25
    min_step = 1e-4
    for _ in range(opts.max_iterations):
        probes = []
        for i in range(x.size):
            for sign in (1.0, -1.0):
                candidate = x.copy()
                candidate[i] += sign * step
                probes.append(candidate)
        values = search.evaluate_batch(probes, mu)
        best_idx = int(np.argmin(values))
        if values[best_idx] < pen - 1e-15:
            decrease = pen - values[best_idx]
            x = probes[best_idx]
            pen, cost, cv, sv = search.evaluate(x, mu)
            search.consider(x, cost, cv, sv)
            search.record(mu, pen, cost, cv, sv, step)
            if decrease <= opts.convergence_tol and step <= min_step:
                break
        else:
            step /= 2.0
            if step < min_step:
                break
    return x


def optimize(model: Model, cfg: ScenarioConfig, init_cp: ControlPoints,
             opts: OptimizerOptions | None = None) -> OptimizationTrace:
    """Penalty-continuation search from init_cp; returns the trace.

    Each penalty stage minimizes cost + mu * violations^2 with the selected
    inner mode, then mu grows tenfold until the best iterate is feasible
    (violations within 1e-3) or the penalty cap is reached. The returned
    best control points are the lowest-cost feasible iterate if one was
    found (trace.feasible True), otherwise the least infeasible iterate.
    """
    opts = opts or OptimizerOptions()
    if init_cp.n_defenders != cfg.n_defenders:
        raise ScenarioError("initial control points do not match defender count")
    search = _Search(model, cfg, init_cp, opts)
    rng = np.random.Generator(np.random.Philox(opts.step_seed))

    x = search.x0.copy()
    mu = opts.penalty_initial
    while True:
        if opts.gradient_mode == "finite-difference":
            x = _minimize_fd(search, x, mu)
        elif opts.gradient_mode == "simultaneous-perturbation":
            x = _minimize_spsa(search, x, mu, rng)
        else:
            x = _minimize_pattern(search, x, mu)
        if max(search.best_cv, search.best_sv) <= FEASIBILITY_TOL:
            break
        if mu >= opts.penalty_max:
            break
        mu = min(mu * opts.penalty_growth, opts.penalty_max)

    trace = search.trace
    trace.best_cp = search.cp(search.best_x)
    trace.best_cp.points[:, 0, :] = search.first_points  # pinned bit-exact
    trace.feasible = max(search.best_cv, search.best_sv) <= FEASIBILITY_TOL
    trace.best_cost = search.best_cost
    trace.best_control_violation = search.best_cv
    trace.best_separation_violation = search.best_sv
    return trace


def trace_to_json(trace: OptimizationTrace, dest: str | Path | IO[str]) -> None:
    """Write iterate scalars and outcome flags as JSON."""
    doc = {
        "evaluations": trace.evaluations,
        "feasible": trace.feasible,
        "best_cost": trace.best_cost,
        "best_control_violation": trace.best_control_violation,
        "best_separation_violation": trace.best_separation_violation,
        "iterates": [
            {
                "mu": it.mu,
                "penalized": it.penalized,
                "cost": it.cost,
                "control_violation": it.control_violation,
                "separation_violation": it.separation_violation,
                "step_norm": it.step_norm,
            }
            for it in trace.iterates
        ],
    }
    text = json.dumps(doc, indent=2) + "\n"
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text)
    else:
        dest.write(text)
