"""Forward propagation of a full engagement under one deterministic model.

Three approximations of the underlying stochastic engagement differ only in
which effectiveness weights couple attrition back into the dynamics and
fire products:

  decoupled ("p1"):  dynamics weights all ones, survival weights = survival
                     probabilities; spatial motion ignores attrition.
  weighted  ("p2"):  both weight sets are the survival probabilities.
  threshold ("p3"):  both weight sets are binary alive indicators, updated
                     whenever a survival probability drops to or below the
                     configured threshold.

The cost of a run is 1 - (final HVU survival probability); defender
trajectories are prescribed control polygons and enter only through their
evaluated states.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path
from typing import IO

import numpy as np

from .attrition import (IndexSet, SurvivalVector, damage_rates,
                        survival_step, threshold_update)
from .bernstein import ControlPoints, DiffMatrix, basis_row, diff_matrix
from .dynamics import (AccelCache, EffectivenessWeights, SwarmState,
                       attacker_accelerations, initial_state, verlet_step)
from .errors import ScenarioError
from .scenario import ScenarioConfig


class Model(enum.Enum):
    """Attrition-coupling regime for deterministic propagation."""

    DECOUPLED = "p1"
    WEIGHTED = "p2"
    THRESHOLD = "p3"

    @classmethod
    def parse(cls, name: str) -> "Model":
        try:
            return cls(name.lower())
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown model {name!r}; expected one of {valid}")


@dataclass
class ConstraintReport:
    """Worst-case constraint figures over the whole grid."""

    control_violation: float       # max over (|u| - u_max)+, 0 when feasible
    min_defender_separation: float  # smallest pairwise distance, inf for M=1


@dataclass
class EngagementResult:
    """Complete log of one deterministic propagation."""

    cost: float                      # 1 - final HVU survival
    q_series: list[SurvivalVector]   # length n_steps+1
    state_series: list[SwarmState]
    iset_series: list[IndexSet]      # all-alive throughout for p1/p2
    constraint_report: ConstraintReport

    def q0_series(self) -> np.ndarray:
        return np.array([q.q_hvu for q in self.q_series])

    def mean_attacker_q(self) -> np.ndarray:
        return np.array([q.q_attackers.mean() for q in self.q_series])

    def mean_defender_q(self) -> np.ndarray:
        return np.array([q.q_defenders.mean() for q in self.q_series])


def defender_series(
    cfg: ScenarioConfig,
    cp: ControlPoints,
    dm: DiffMatrix | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Defender positions, velocities, controls on the whole time grid.

    Shapes (n_steps+1, M, 3). One basis-matrix product serves all steps.
    """
    if dm is None:
        dm = diff_matrix(cp.order, cp.horizon)
    rows = np.stack([basis_row(cp.order, t, cp.horizon) for t in cfg.times])
    pos = np.einsum("kj,mjd->kmd", rows, cp.points)
    vel = np.einsum("kj,mjd->kmd", rows @ dm.d.T, cp.points)
    ctrl = np.einsum("kj,mjd->kmd", rows @ dm.d2.T, cp.points)
    return pos, vel, ctrl


def _check_compatible(cfg: ScenarioConfig, cp: ControlPoints) -> None:
    if cp.n_defenders != cfg.n_defenders:
        raise ScenarioError(
            f"control points describe {cp.n_defenders} defenders, "
            f"scenario has {cfg.n_defenders}")
    if abs(cp.horizon - cfg.t_f) > 1e-9 * max(1.0, cfg.t_f):
        raise ScenarioError(
            f"control-point horizon {cp.horizon} does not match "
            f"scenario horizon {cfg.t_f}")


def propagate(model: Model, cfg: ScenarioConfig, cp: ControlPoints) -> EngagementResult:
    """Run one engagement to t_f and log every step.

    Per step: damage rates at the current positions, survival products with
    the model's survival weights, threshold removal for the threshold
    model, then a Verlet step under the model's dynamics weights with
    defender states prescribed by the control points (including at t = 0,
    where the trajectory overrides the scenario's nominal defender state).
    Deterministic: identical inputs give bit-identical results.
    """
    _check_compatible(cfg, cp)
    dm = diff_matrix(cp.order, cp.horizon)
    def_pos, def_vel, def_ctrl = defender_series(cfg, cp, dm)

    state = initial_state(cfg)
    state.defender_pos = def_pos[0].copy()
    state.defender_vel = def_vel[0].copy()
    q = SurvivalVector.ones(cfg.n_attackers, cfg.n_defenders)
    iset = IndexSet.full(cfg.n_attackers, cfg.n_defenders)

    q_series = [q.copy()]
    state_series = [state.copy()]
    iset_series = [iset.copy()]

    # At t = 0 every weight is exactly one under all three models.
    ones = EffectivenessWeights.ones(cfg.n_attackers, cfg.n_defenders)
    cache = AccelCache(attacker_accelerations(state, ones, cfg))

    for k in range(cfg.n_steps):
        rates = damage_rates(state, cfg)
        surv_w = iset.as_weights() if model is Model.THRESHOLD else q.as_weights()
        q_next = survival_step(q, rates, surv_w, cfg.dt)

        if model is Model.THRESHOLD:
            iset_next = threshold_update(iset, q_next, cfg.survival_threshold)
            dyn_w = iset_next.as_weights()
        else:
            iset_next = iset
            if model is Model.WEIGHTED:
                dyn_w = q_next.as_weights()
            else:
                dyn_w = EffectivenessWeights.ones(cfg.n_attackers, cfg.n_defenders)

        state, cache = verlet_step(
            state, cache, dyn_w, (def_pos[k + 1], def_vel[k + 1]), cfg)
        q, iset = q_next, iset_next
        q_series.append(q.copy())
        state_series.append(state.copy())
        iset_series.append(iset.copy())

    report = _constraint_report(cfg, def_pos, def_ctrl)
    return EngagementResult(
        cost=1.0 - q_series[-1].q_hvu,
        q_series=q_series,
        state_series=state_series,
        iset_series=iset_series,
        constraint_report=report,
    )


def _constraint_report(cfg: ScenarioConfig, def_pos: np.ndarray,
                       def_ctrl: np.ndarray) -> ConstraintReport:
    control_violation = float(np.maximum(np.abs(def_ctrl) - cfg.u_max, 0.0).max())
    m = def_pos.shape[1]
    if m < 2:
        return ConstraintReport(control_violation, float("inf"))
    diff = def_pos[:, :, None, :] - def_pos[:, None, :, :]
    dist = np.linalg.norm(diff, axis=3)
    iu = np.triu_indices(m, k=1)
    min_sep = float(dist[:, iu[0], iu[1]].min())
    return ConstraintReport(control_violation, min_sep)


def constraint_residuals(cfg: ScenarioConfig, cp: ControlPoints) -> tuple[float, float]:
    """(control bound violation, separation violation), both >= 0, on the grid.

    Zero means feasible: every control component within u_max and every
    defender pair at least d_min apart at all sampled steps.
    """
    _check_compatible(cfg, cp)
    def_pos, _, def_ctrl = defender_series(cfg, cp)
    report = _constraint_report(cfg, def_pos, def_ctrl)
    if np.isinf(report.min_defender_separation):
        separation_violation = 0.0
    else:
        separation_violation = max(cfg.d_min - report.min_defender_separation, 0.0)
    return report.control_violation, float(separation_violation)


def _fmt(x) -> str:
    return repr(float(x))


def result_to_csv(
    result: EngagementResult,
    cfg: ScenarioConfig,
    dest: str | Path | IO[str],
    include_positions: bool = False,
) -> None:
    """Write the per-step series as CSV: one row per time step.

    Base columns: t, q0, att_q_mean, def_q_mean, att_alive, def_alive,
    hvu_alive. With include_positions, per-agent position columns
    (att{i}_x..z, def{k}_x..z) follow.
    """
    header = ["t", "q0", "att_q_mean", "def_q_mean",
              "att_alive", "def_alive", "hvu_alive"]
    if include_positions:
        for i in range(cfg.n_attackers):
            header += [f"att{i}_{ax}" for ax in "xyz"]
        for k in range(cfg.n_defenders):
            header += [f"def{k}_{ax}" for ax in "xyz"]

    def write(fh: IO[str]) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for k, t in enumerate(cfg.times):
            q = result.q_series[k]
            iset = result.iset_series[k]
            row = [_fmt(t), _fmt(q.q_hvu),
                   _fmt(q.q_attackers.mean()), _fmt(q.q_defenders.mean()),
                   str(int(iset.attacker_alive.sum())),
                   str(int(iset.defender_alive.sum())),
                   str(int(iset.hvu_alive))]
            if include_positions:
                state = result.state_series[k]
                for pos in state.attacker_pos:
                    row += [_fmt(c) for c in pos]
                for pos in state.defender_pos:
                    row += [_fmt(c) for c in pos]
            writer.writerow(row)

    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="") as fh:
            write(fh)
    else:
        write(dest)
