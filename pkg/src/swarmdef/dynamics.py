"""Attacker force laws and velocity-Verlet propagation of the swarm state.

Attackers move under four forces: pairwise inter-attacker interaction
(repulsive inside d0, attractive between d0 and d1, zero beyond), repulsion
from defenders (inside s0), a constant-magnitude pull toward the HVU, and
linear velocity damping. Per-agent effectiveness weights scale the
inter-attacker and defender contributions; passing all-ones weights
reproduces the unweighted force law through the identical code path, so the
plain and weighted models agree bitwise when all weights are one.

Defenders are kinematic: their states are prescribed (evaluated from
trajectory polynomials) and overwritten each step, never force-integrated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PropagationError
from .scenario import SOFTENING_RADIUS, ScenarioConfig


@dataclass
class SwarmState:
    """Positions and velocities of every agent at one time index.

    Array dimensions are fixed for the whole run; death is expressed
    through weights, never by shrinking arrays.
    """

    attacker_pos: np.ndarray   # (N, 3)
    attacker_vel: np.ndarray   # (N, 3)
    defender_pos: np.ndarray   # (M, 3)
    defender_vel: np.ndarray   # (M, 3)
    hvu_pos: np.ndarray        # (3,)
    time_index: int = 0

    def copy(self) -> "SwarmState":
        return SwarmState(
            self.attacker_pos.copy(), self.attacker_vel.copy(),
            self.defender_pos.copy(), self.defender_vel.copy(),
            self.hvu_pos.copy(), self.time_index)


@dataclass
class EffectivenessWeights:
    """Per-agent multipliers in [0, 1] scaling force and fire contributions.

    Survival probabilities, binary threshold indicators, or alive masks,
    depending on the model in play.
    """

    attacker_w: np.ndarray  # (N,)
    defender_w: np.ndarray  # (M,)

    @staticmethod
    def ones(n_attackers: int, n_defenders: int) -> "EffectivenessWeights":
        return EffectivenessWeights(np.ones(n_attackers), np.ones(n_defenders))


@dataclass
class AccelCache:
    """Previous step's attacker accelerations, reused by the velocity update."""

    attacker_acc: np.ndarray  # (N, 3)


def initial_state(cfg: ScenarioConfig) -> SwarmState:
    """SwarmState at time index 0 from the scenario's initial conditions."""
    apos, avel = cfg.attacker_initial_state()
    dpos, dvel = cfg.defender_initial_state()
    return SwarmState(apos, avel, dpos, dvel, cfg.hvu_position.copy(), 0)


def f_inter(r, d0: float, d1: float, k_rep: float, k_att: float):
    """Signed inter-attacker force profile at separation r.

    Positive means repulsion (force on i along x_i - x_j). The profile is
    k_rep*(d0/r - 1) inside d0, a quartic-free attractive well
    -k_att*4*(r-d0)*(d1-r)/(d1-d0)^2 between d0 and d1, and exactly zero
    beyond d1; continuous everywhere, zero at r = d0.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("f_inter requires r > 0")
    r_soft = np.maximum(r, SOFTENING_RADIUS)
    repel = k_rep * (d0 / r_soft - 1.0)
    attract = -k_att * 4.0 * (r - d0) * (d1 - r) / (d1 - d0) ** 2
    out = np.where(r <= d0, repel, np.where(r <= d1, attract, 0.0))
    return out if out.ndim else float(out)


def f_def(r, s0: float, k_dref: float):
    """Defender repulsion profile: k_dref*(s0/r - 1) inside s0, zero beyond.

    Non-negative and non-increasing; continuous (value 0) at r = s0.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("f_def requires r > 0")
    r_soft = np.maximum(r, SOFTENING_RADIUS)
    out = np.where(r <= s0, k_dref * (s0 / r_soft - 1.0), 0.0)
    return out if out.ndim else float(out)


def attacker_accelerations(
    state: SwarmState,
    weights: EffectivenessWeights,
    cfg: ScenarioConfig,
) -> np.ndarray:
    """Total acceleration on every attacker, shape (N, 3).

    For attacker i:

        sum_{j != i} w_att[j] * f_inter(|x_ij|) * x_ij/|x_ij|
      + sum_k       w_def[k] * f_def(|s_ik|)  * s_ik/|s_ik|
      + K * h_i/|h_i|  -  b * v_i

    with x_ij = x_i - x_j, s_ik = x_i - y_k, h_i = h - x_i. An attacker
    sitting exactly on the HVU gets a zero leader term. Distances feeding
    1/r terms are floored at the softening radius.
    """
    x = state.attacker_pos
    n = x.shape[0]

    # Inter-attacker pairwise term; the diagonal is masked, not skipped, so
    # the summation order over j is identical for every weighting.
    diff = x[:, None, :] - x[None, :, :]                  # x_ij
    dist = np.linalg.norm(diff, axis=2)
    dist_soft = np.maximum(dist, SOFTENING_RADIUS)
    off_diag = ~np.eye(n, dtype=bool)
    magnitude = np.zeros((n, n))
    magnitude[off_diag] = f_inter(
        dist_soft[off_diag], cfg.d0, cfg.d1, cfg.k_rep, cfg.k_att)
    coeff = weights.attacker_w[None, :] * magnitude / dist_soft
    acc = np.sum(coeff[:, :, None] * diff, axis=1)

    sdiff = x[:, None, :] - state.defender_pos[None, :, :]  # s_ik
    sdist = np.maximum(np.linalg.norm(sdiff, axis=2), SOFTENING_RADIUS)
    smag = f_def(sdist, cfg.s0, cfg.k_dref)
    scoeff = weights.defender_w[None, :] * smag / sdist
    acc += np.sum(scoeff[:, :, None] * sdiff, axis=1)

    head = state.hvu_pos[None, :] - x                       # h_i
    head_norm = np.linalg.norm(head, axis=1)
    safe = np.where(head_norm > 0.0, head_norm, 1.0)
    acc += cfg.leader_gain * np.where(
        head_norm[:, None] > 0.0, head / safe[:, None], 0.0)

    acc -= cfg.damping * state.attacker_vel
    return acc


def verlet_step(
    state: SwarmState,
    cache: AccelCache,
    weights: EffectivenessWeights,
    defender_next: tuple[np.ndarray, np.ndarray],
    cfg: ScenarioConfig,
) -> tuple[SwarmState, AccelCache]:
    """Advance attackers one step by velocity-Verlet; defenders are prescribed.

    Positions advance by x + v*dt + a*dt^2/2 with the cached acceleration.
    The new acceleration is evaluated once, at the new positions and next
    defender states, with velocities extrapolated a full step (v + a*dt);
    velocities then advance by the trapezoidal (a_old + a_new)*dt/2. The
    returned cache carries the new acceleration for the next step, so the
    force loop runs exactly once per step.

    ``weights`` are the effectiveness weights in force at the step being
    entered (t_{k+1}); ``defender_next`` supplies the prescribed defender
    (positions, velocities) there.
    """
    dt = cfg.dt
    a_old = cache.attacker_acc
    x_new = state.attacker_pos + state.attacker_vel * dt + a_old * (dt * dt / 2.0)
    v_pred = state.attacker_vel + a_old * dt
    def_pos, def_vel = defender_next
    trial = SwarmState(x_new, v_pred, def_pos, def_vel,
                       state.hvu_pos, state.time_index + 1)
    a_new = attacker_accelerations(trial, weights, cfg)
    v_new = state.attacker_vel + (a_old + a_new) * (dt / 2.0)

    if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(v_new))):
        bad = np.flatnonzero(
            ~(np.isfinite(x_new).all(axis=1) & np.isfinite(v_new).all(axis=1)))
        raise PropagationError(
            "attacker state diverged to non-finite values",
            step=state.time_index + 1,
            agent=int(bad[0]) if bad.size else None)

    next_state = SwarmState(x_new, v_new, np.asarray(def_pos, dtype=float),
                            np.asarray(def_vel, dtype=float),
                            state.hvu_pos, state.time_index + 1)
    return next_state, AccelCache(a_new)
