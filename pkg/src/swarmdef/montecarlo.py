"""Stochastic replay of engagements with random agent removal.

Where the deterministic models carry survival probabilities forward, these
runs enact the underlying random process: each step, every alive agent
draws one uniform variate and dies when the draw exceeds its one-step
survival ratio. Dead agents freeze in place and are masked out of both
force and fire. Ensembles over consecutive seeds estimate the true
survival statistics that the deterministic models approximate.
"""

from __future__ import annotations

import csv
import functools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO

import numpy as np

from .attrition import IndexSet, SurvivalVector, damage_rates, mc_removal, survival_step
from .bernstein import ControlPoints, diff_matrix
from .dynamics import AccelCache, EffectivenessWeights, attacker_accelerations, \
    initial_state, verlet_step
from .engagement import _check_compatible, defender_series
from .parallel import parallel_map
from .scenario import ScenarioConfig


@dataclass
class MCRunRecord:
    """Outcome of a single seeded stochastic run.

    The removal log holds (step, agent_id, side) triples, where ``step`` is
    the time index at which the agent is first dead and ``side`` is one of
    "attacker", "defender", "hvu". Alive counts at any step are derivable
    from the log.
    """

    seed: int
    hvu_survived: bool
    final_attackers_alive: int
    final_defenders_alive: int
    q0_series: np.ndarray            # (n_steps+1,) alive-mask bookkeeping
    removal_log: list[tuple[int, int, str]]


@dataclass
class MCStats:
    """Per-step ensemble statistics over independent seeded runs."""

    n_runs: int
    base_seed: int
    hvu_frequency: np.ndarray          # (n_steps+1,) empirical survival
    hvu_halfwidth: np.ndarray          # 95% binomial interval half-widths
    attacker_alive_fraction: np.ndarray
    defender_alive_fraction: np.ndarray


def mc_run(cfg: ScenarioConfig, cp: ControlPoints, seed: int) -> MCRunRecord:
    """One stochastic engagement, fully determined by the seed.

    Steps mirror the deterministic propagation, with alive masks as the
    effectiveness weights and the random removal rule in place of
    thresholding. The uniform stream comes from a counter-based generator;
    draws go to alive agents in fixed order (attackers, defenders, HVU), so
    the realization is reproducible under any execution order.
    """
    _check_compatible(cfg, cp)
    dm = diff_matrix(cp.order, cp.horizon)
    def_pos, def_vel, _ = defender_series(cfg, cp, dm)
    return _run_with_series(cfg, def_pos, def_vel, seed)


def _run_with_series(cfg: ScenarioConfig, def_pos: np.ndarray,
                     def_vel: np.ndarray, seed: int) -> MCRunRecord:
    rng = np.random.Generator(np.random.Philox(seed))
    state = initial_state(cfg)
    state.defender_pos = def_pos[0].copy()
    state.defender_vel = def_vel[0].copy()
    q = SurvivalVector.ones(cfg.n_attackers, cfg.n_defenders)
    iset = IndexSet.full(cfg.n_attackers, cfg.n_defenders)

    q0_series = np.ones(cfg.n_steps + 1)
    removal_log: list[tuple[int, int, str]] = []
    ones = EffectivenessWeights.ones(cfg.n_attackers, cfg.n_defenders)
    cache = AccelCache(attacker_accelerations(state, ones, cfg))

    for k in range(cfg.n_steps):
        rates = damage_rates(state, cfg)
        q_next = survival_step(q, rates, iset.as_weights(), cfg.dt)
        # Dead agents are out of the fight; their bookkeeping freezes.
        q_next.q_attackers = np.where(
            iset.attacker_alive, q_next.q_attackers, q.q_attackers)
        q_next.q_defenders = np.where(
            iset.defender_alive, q_next.q_defenders, q.q_defenders)
        if not iset.hvu_alive:
            q_next.q_hvu = q.q_hvu

        iset_next, rng = mc_removal(iset, q, q_next, rng)
        for i in np.flatnonzero(iset.attacker_alive & ~iset_next.attacker_alive):
            removal_log.append((k + 1, int(i), "attacker"))
        for j in np.flatnonzero(iset.defender_alive & ~iset_next.defender_alive):
            removal_log.append((k + 1, int(j), "defender"))
        if iset.hvu_alive and not iset_next.hvu_alive:
            removal_log.append((k + 1, 0, "hvu"))

        prev_att_pos = state.attacker_pos
        prev_def_pos = state.defender_pos
        state, cache = verlet_step(
            state, cache, iset_next.as_weights(),
            (def_pos[k + 1], def_vel[k + 1]), cfg)
        dead_att = ~iset_next.attacker_alive
        if dead_att.any():
            state.attacker_pos[dead_att] = prev_att_pos[dead_att]
            state.attacker_vel[dead_att] = 0.0
        dead_def = ~iset_next.defender_alive
        if dead_def.any():
            state.defender_pos[dead_def] = prev_def_pos[dead_def]
            state.defender_vel[dead_def] = 0.0

        q, iset = q_next, iset_next
        q0_series[k + 1] = q.q_hvu

    return MCRunRecord(
        seed=seed,
        hvu_survived=iset.hvu_alive,
        final_attackers_alive=int(iset.attacker_alive.sum()),
        final_defenders_alive=int(iset.defender_alive.sum()),
        q0_series=q0_series,
        removal_log=removal_log,
    )


def alive_series(record: MCRunRecord, n_steps: int,
                 n_attackers: int, n_defenders: int
                 ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reconstruct per-step alive counts (attackers, defenders, hvu) from the log."""
    att = np.full(n_steps + 1, n_attackers, dtype=float)
    dfn = np.full(n_steps + 1, n_defenders, dtype=float)
    hvu = np.ones(n_steps + 1)
    for step, _, side in record.removal_log:
        if side == "attacker":
            att[step:] -= 1
        elif side == "defender":
            dfn[step:] -= 1
        else:
            hvu[step:] = 0.0
    return att, dfn, hvu


def _run_for_seed(cfg: ScenarioConfig, def_pos: np.ndarray, def_vel: np.ndarray,
                  seed: int) -> MCRunRecord:
    return _run_with_series(cfg, def_pos, def_vel, seed)


def mc_ensemble(cfg: ScenarioConfig, cp: ControlPoints, n_runs: int,
                base_seed: int) -> MCStats:
    """Aggregate n_runs independent runs with seeds base_seed + index.

    Replicas may execute in parallel (bounded by SWARM_THREADS); the
    reduction is a fixed-order sum over the seed index, so the statistics
    are independent of scheduling. The defender series is evaluated once
    and shared by every replica.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    _check_compatible(cfg, cp)
    def_pos, def_vel, _ = defender_series(cfg, cp)
    seeds = [base_seed + i for i in range(n_runs)]
    records = parallel_map(
        functools.partial(_run_for_seed, cfg, def_pos, def_vel), seeds)

    att_sum = np.zeros(cfg.n_steps + 1)
    def_sum = np.zeros(cfg.n_steps + 1)
    hvu_sum = np.zeros(cfg.n_steps + 1)
    for record in records:
        att, dfn, hvu = alive_series(
            record, cfg.n_steps, cfg.n_attackers, cfg.n_defenders)
        att_sum += att
        def_sum += dfn
        hvu_sum += hvu

    freq = hvu_sum / n_runs
    halfwidth = 1.96 * np.sqrt(freq * (1.0 - freq) / n_runs)
    return MCStats(
        n_runs=n_runs,
        base_seed=base_seed,
        hvu_frequency=freq,
        hvu_halfwidth=halfwidth,
        attacker_alive_fraction=att_sum / (n_runs * cfg.n_attackers),
        defender_alive_fraction=def_sum / (n_runs * cfg.n_defenders),
    )


def _fmt(x) -> str:
    return repr(float(x))


def mcstats_to_csv(stats: MCStats, cfg: ScenarioConfig,
                   dest: str | Path | IO[str]) -> None:
    """Per-step CSV: t, hvu_freq, hvu_halfwidth, att_alive_frac, def_alive_frac."""
    def write(fh: IO[str]) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "hvu_freq", "hvu_halfwidth",
                         "att_alive_frac", "def_alive_frac"])
        for k, t in enumerate(cfg.times):
            writer.writerow([
                _fmt(t), _fmt(stats.hvu_frequency[k]),
                _fmt(stats.hvu_halfwidth[k]),
                _fmt(stats.attacker_alive_fraction[k]),
                _fmt(stats.defender_alive_fraction[k]),
            ])

    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="") as fh:
            write(fh)
    else:
        write(dest)


def mcstats_to_json(stats: MCStats, dest: str | Path | IO[str]) -> None:
    """Summary JSON: run count, seed, and final-step statistics."""
    doc = {
        "n_runs": stats.n_runs,
        "base_seed": stats.base_seed,
        "final_hvu_survival_frequency": float(stats.hvu_frequency[-1]),
        "final_hvu_halfwidth": float(stats.hvu_halfwidth[-1]),
        "final_attacker_alive_fraction": float(stats.attacker_alive_fraction[-1]),
        "final_defender_alive_fraction": float(stats.defender_alive_fraction[-1]),
    }
    text = json.dumps(doc, indent=2) + "\n"
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text)
    else:
        dest.write(text)
