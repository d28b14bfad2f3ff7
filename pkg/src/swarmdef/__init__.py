"""Swarm-vs-swarm engagement toolkit.

Simulates an attacking swarm closing on a stationary high-value unit (HVU)
defended by a small team whose trajectories are Bernstein polynomials.
Attrition couples into the spatial dynamics through per-agent effectiveness
weights; three deterministic models (decoupled "p1", survival-weighted "p2",
threshold "p3") approximate the underlying random-removal process, which a
seeded Monte Carlo engine enacts directly for validation.
"""

from .scenario import ScenarioConfig, load_scenario, save_scenario, default_initializer
from .engagement import Model, EngagementResult, propagate, constraint_residuals
from .bernstein import ControlPoints, load_control_points, save_control_points
from .optimizer import OptimizerOptions, OptimizationTrace, optimize, initialize_control_points
from .montecarlo import MCRunRecord, MCStats, mc_run, mc_ensemble

__version__ = "0.1.0"

__all__ = [
    "ScenarioConfig",
    "load_scenario",
    "save_scenario",
    "default_initializer",
    "Model",
    "EngagementResult",
    "propagate",
    "constraint_residuals",
    "ControlPoints",
    "load_control_points",
    "save_control_points",
    "OptimizerOptions",
    "OptimizationTrace",
    "optimize",
    "initialize_control_points",
    "MCRunRecord",
    "MCStats",
    "mc_run",
    "mc_ensemble",
]
