"""Model-comparison and defenders-vs-cost sweep experiments.

The comparison runs all three deterministic models and a seeded stochastic
ensemble on one scenario and aligns their survival series on the shared
time grid. The trade-off sweep re-optimizes defender trajectories for a
range of team sizes under a weapon-range asymmetry and records the
optimized cost per size.
"""

from __future__ import annotations

import csv
import dataclasses
import time
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from .bernstein import ControlPoints
from .engagement import Model, propagate
from .errors import SwarmDefError
from .montecarlo import MCStats, mc_ensemble
from .optimizer import OptimizerOptions, initialize_control_points, optimize
from .scenario import ScenarioConfig, default_initializer

WEAPON_CONFIGS = ("A-type", "B-type", "symmetric")

# A 10% range advantage in distance: the damage shape takes squared
# distance over sigma, so range scales with sqrt(sigma) and a 10% longer
# reach means sigma grows by 1.1^2.
RANGE_ADVANTAGE_SIGMA_FACTOR = 1.1 ** 2


def apply_weapon_config(cfg: ScenarioConfig, weapon_config: str) -> ScenarioConfig:
    """Scale sigma_a (A-type) or sigma_d (B-type); symmetric leaves cfg alone."""
    if weapon_config == "A-type":
        return dataclasses.replace(
            cfg, sigma_a=cfg.sigma_a * RANGE_ADVANTAGE_SIGMA_FACTOR)
    if weapon_config == "B-type":
        return dataclasses.replace(
            cfg, sigma_d=cfg.sigma_d * RANGE_ADVANTAGE_SIGMA_FACTOR)
    if weapon_config == "symmetric":
        return cfg
    raise ValueError(
        f"unknown weapon_config {weapon_config!r}; expected one of {WEAPON_CONFIGS}")


@dataclass
class ComparisonReport:
    """Aligned survival series for the three models and the MC ensemble."""

    times: np.ndarray                      # (n_steps+1,)
    q0: dict[Model, np.ndarray]            # HVU survival per model
    attacker_q: dict[Model, np.ndarray]    # mean attacker survival per model
    defender_q: dict[Model, np.ndarray]
    mc: MCStats


def run_comparison(cfg: ScenarioConfig, cp: ControlPoints, n_runs: int,
                   base_seed: int | None = None) -> ComparisonReport:
    """Propagate every model once and validate against an MC ensemble.

    The ensemble uses seeds base_seed + 0..n_runs-1, defaulting base_seed
    to the scenario's rng_seed.
    """
    seed = cfg.rng_seed if base_seed is None else base_seed
    q0, att_q, def_q = {}, {}, {}
    for model in Model:
        result = propagate(model, cfg, cp)
        q0[model] = result.q0_series()
        att_q[model] = result.mean_attacker_q()
        def_q[model] = result.mean_defender_q()
    stats = mc_ensemble(cfg, cp, n_runs, seed)
    return ComparisonReport(times=cfg.times, q0=q0, attacker_q=att_q,
                            defender_q=def_q, mc=stats)


def _fmt(x) -> str:
    return repr(float(x))


def comparison_to_csv(report: ComparisonReport, dest: str | Path | IO[str]) -> None:
    """Write the aligned series; columns documented in docs/formats.md."""
    header = ["t", "q0_p1", "q0_p2", "q0_p3", "q0_mc_mean", "q0_mc_halfwidth",
              "attQ_p1", "attQ_p2", "attQ_p3", "attQ_mc",
              "defQ_p1", "defQ_p2", "defQ_p3", "defQ_mc"]
    models = [Model.DECOUPLED, Model.WEIGHTED, Model.THRESHOLD]

    def write(fh: IO[str]) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for k, t in enumerate(report.times):
            row = [_fmt(t)]
            row += [_fmt(report.q0[m][k]) for m in models]
            row += [_fmt(report.mc.hvu_frequency[k]),
                    _fmt(report.mc.hvu_halfwidth[k])]
            row += [_fmt(report.attacker_q[m][k]) for m in models]
            row += [_fmt(report.mc.attacker_alive_fraction[k])]
            row += [_fmt(report.defender_q[m][k]) for m in models]
            row += [_fmt(report.mc.defender_alive_fraction[k])]
            writer.writerow(row)

    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="") as fh:
            write(fh)
    else:
        write(dest)


@dataclass
class TradeoffRow:
    """One sweep entry: optimized cost for a given team size and asymmetry."""

    model: Model
    n_defenders: int
    weapon_config: str
    cost: float
    evaluations: int
    seconds: float | None = None
    error: str | None = None


def _scenario_for_team_size(base_cfg: ScenarioConfig, m: int) -> ScenarioConfig:
    """Rebuild the scenario with m defenders re-sampled around the HVU.

    Positions come from the deterministic initializer (fixed seed from the
    base scenario), spawned inside the defender-repulsion radius with the
    configured minimum separation; velocities start at zero. Attacker
    initial conditions are left untouched so the sweep isolates the effect
    of team size.
    """
    pos, vel = default_initializer(
        m, radius=base_cfg.s0, center=base_cfg.hvu_position,
        seed=base_cfg.rng_seed, min_separation=base_cfg.d_min)
    defenders = np.stack([pos, vel], axis=1)
    return dataclasses.replace(base_cfg, n_defenders=m, initial_defenders=defenders)


def tradeoff_sweep(
    base_cfg: ScenarioConfig,
    model: Model,
    m_values: Sequence[int],
    weapon_config: str,
    opts: OptimizerOptions | None = None,
    init_strategy: str = "radial-picket",
    record_timings: bool = False,
) -> list[TradeoffRow]:
    """Optimize the defense for each team size and record the achieved cost.

    Rows come back in input order; a per-size optimizer failure is recorded
    in its row (cost NaN, error message) and the sweep continues. Wall time
    is recorded only when record_timings is set, keeping default outputs
    free of nondeterministic fields.
    """
    if not m_values:
        raise ValueError("m_values must be non-empty")
    swept = apply_weapon_config(base_cfg, weapon_config)
    rows: list[TradeoffRow] = []
    for m in m_values:
        started = time.perf_counter()
        try:
            cfg_m = _scenario_for_team_size(swept, int(m))
            init_cp = initialize_control_points(cfg_m, init_strategy)
            trace = optimize(model, cfg_m, init_cp, opts)
            rows.append(TradeoffRow(
                model=model, n_defenders=int(m), weapon_config=weapon_config,
                cost=trace.best_cost, evaluations=trace.evaluations,
                seconds=(time.perf_counter() - started) if record_timings else None,
            ))
        except SwarmDefError as exc:
            rows.append(TradeoffRow(
                model=model, n_defenders=int(m), weapon_config=weapon_config,
                cost=float("nan"), evaluations=0,
                seconds=(time.perf_counter() - started) if record_timings else None,
                error=str(exc),
            ))
    return rows


def tradeoff_to_csv(rows: Sequence[TradeoffRow],
                    dest: str | Path | IO[str]) -> None:
    """Write sweep rows: model, M, weapon_config, J, evals, seconds.

    The seconds cell is empty unless the sweep recorded timings.
    """
    def write(fh: IO[str]) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "M", "weapon_config", "J", "evals", "seconds"])
        for row in rows:
            writer.writerow([
                row.model.value, str(row.n_defenders), row.weapon_config,
                _fmt(row.cost), str(row.evaluations),
                "" if row.seconds is None else _fmt(row.seconds),
            ])

    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="") as fh:
            write(fh)
    else:
        write(dest)


def minimal_sufficient_team(rows: Sequence[TradeoffRow],
                            cost_threshold: float = 0.1) -> int | None:
    """Smallest team size whose optimized cost drops below the threshold."""
    qualifying = [row.n_defenders for row in rows
                  if row.error is None and row.cost < cost_threshold]
    return min(qualifying) if qualifying else None
