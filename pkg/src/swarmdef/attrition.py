"""Weapon damage, survival-probability recursions, and removal bookkeeping.

The per-pair damage rate is lambda * phi(squared distance / sigma), where
phi is the complementary standard normal 2*(1 - NormalCDF(x)): it equals 1
at zero separation and decays smoothly to zero. Survival probabilities
evolve by products of per-opponent factors (1 - rate * weight * dt), with
the opponent's effectiveness weight coupling attrition to the alive state.

Two removal rules consume the survival state: a deterministic threshold
(agents die when their probability drops to or below the threshold) and a
stochastic rule that draws one uniform variate per alive agent and kills
when the draw exceeds the one-step survival ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .dynamics import EffectivenessWeights, SwarmState
from .errors import ConfigurationError, PropagationError
from .scenario import ScenarioConfig

_SQRT2 = np.sqrt(2.0)


@dataclass
class SurvivalVector:
    """Survival probabilities of the HVU and every agent; all start at 1."""

    q_hvu: float
    q_attackers: np.ndarray  # (N,)
    q_defenders: np.ndarray  # (M,)

    @staticmethod
    def ones(n_attackers: int, n_defenders: int) -> "SurvivalVector":
        return SurvivalVector(1.0, np.ones(n_attackers), np.ones(n_defenders))

    def copy(self) -> "SurvivalVector":
        return SurvivalVector(
            self.q_hvu, self.q_attackers.copy(), self.q_defenders.copy())

    def as_weights(self) -> EffectivenessWeights:
        """Survival probabilities used directly as effectiveness weights."""
        return EffectivenessWeights(self.q_attackers, self.q_defenders)


@dataclass
class IndexSet:
    """Alive/dead bookkeeping; removal is permanent within a run."""

    attacker_alive: np.ndarray  # (N,) bool
    defender_alive: np.ndarray  # (M,) bool
    hvu_alive: bool

    @staticmethod
    def full(n_attackers: int, n_defenders: int) -> "IndexSet":
        return IndexSet(np.ones(n_attackers, dtype=bool),
                        np.ones(n_defenders, dtype=bool), True)

    def copy(self) -> "IndexSet":
        return IndexSet(self.attacker_alive.copy(),
                        self.defender_alive.copy(), self.hvu_alive)

    def as_weights(self) -> EffectivenessWeights:
        """Binary weights: 1 for alive agents, 0 for dead."""
        return EffectivenessWeights(self.attacker_alive.astype(float),
                                    self.defender_alive.astype(float))


@dataclass
class DamageRates:
    """Pairwise destruction rates (1/time) at one instant.

    att[i, k]: rate at which defender k destroys attacker i.
    on_def[k, i]: rate at which attacker i destroys defender k.
    hvu[i]: rate at which attacker i destroys the HVU.
    """

    att: np.ndarray     # (N, M)
    on_def: np.ndarray  # (M, N)
    hvu: np.ndarray     # (N,)


def phi(x):
    """Weapon damage shape: 2*(1 - standard normal CDF), 1 at 0, decaying tail."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("phi requires x >= 0")
    out = erfc(x / _SQRT2)
    return out if out.ndim else float(out)


def damage_rates(state: SwarmState, cfg: ScenarioConfig) -> DamageRates:
    """All pairwise rates from current positions.

    Defender fire on attacker i uses lambda_d * phi(|x_i - y_k|^2 / sigma_d);
    attacker fire on defender k and on the HVU uses lambda_a with sigma_a.
    """
    sep = state.attacker_pos[:, None, :] - state.defender_pos[None, :, :]
    sq = np.sum(sep * sep, axis=2)                    # (N, M)
    att = cfg.lambda_d * phi(sq / cfg.sigma_d)
    on_def = (cfg.lambda_a * phi(sq / cfg.sigma_a)).T  # (M, N)
    head = state.hvu_pos[None, :] - state.attacker_pos
    hvu = cfg.lambda_a * phi(np.sum(head * head, axis=1) / cfg.sigma_a)
    return DamageRates(att, on_def, hvu)


def _factors(rates: np.ndarray, weights: np.ndarray, dt: float,
             target_side: str) -> np.ndarray:
    f = 1.0 - rates * weights * dt
    if np.any(f < 0.0):
        idx = np.argwhere(f < 0.0)[0]
        pair = " vs ".join(str(int(i)) for i in idx)
        raise ConfigurationError(
            f"survival factor negative for {target_side} pair ({pair}): "
            f"dt too large for the configured rates")
    return f


def survival_step(
    q: SurvivalVector,
    rates: DamageRates,
    eff: EffectivenessWeights,
    dt: float,
) -> SurvivalVector:
    """One step of the survival product recursions.

    Each opponent contributes a factor (1 - rate * weight * dt), with the
    opponent's effectiveness weight: survival probabilities give the
    probability-coupled recursion, binary threshold weights the masked one,
    alive masks the stochastic-replay bookkeeping. A factor that would go
    negative raises ConfigurationError rather than silently clamping.
    """
    att_f = _factors(rates.att, eff.defender_w[None, :], dt, "attacker/defender")
    def_f = _factors(rates.on_def, eff.attacker_w[None, :], dt, "defender/attacker")
    hvu_f = _factors(rates.hvu, eff.attacker_w, dt, "hvu/attacker")
    return SurvivalVector(
        q_hvu=q.q_hvu * float(np.prod(hvu_f)),
        q_attackers=q.q_attackers * np.prod(att_f, axis=1),
        q_defenders=q.q_defenders * np.prod(def_f, axis=1),
    )


def threshold_update(iset: IndexSet, q: SurvivalVector,
                     threshold: float) -> IndexSet:
    """Kill every alive agent whose survival probability is <= threshold.

    The boundary is inclusive (probability exactly at the threshold dies);
    dead agents never revive. Applies to attackers, defenders, and the HVU.
    """
    return IndexSet(
        attacker_alive=iset.attacker_alive & (q.q_attackers > threshold),
        defender_alive=iset.defender_alive & (q.q_defenders > threshold),
        hvu_alive=iset.hvu_alive and q.q_hvu > threshold,
    )


def mc_removal(
    iset: IndexSet,
    q_prev: SurvivalVector,
    q_next: SurvivalVector,
    rng: np.random.Generator,
) -> tuple[IndexSet, np.random.Generator]:
    """Stochastic removal: one uniform draw per alive agent, fixed order.

    Agent j dies when its draw exceeds the one-step survival ratio
    q_next[j] / q_prev[j]. Draw order is attackers 0..N-1, then defenders
    0..M-1, then the HVU; dead agents consume no draws, which pins the
    stream layout for reproducibility. Returns the updated index set and
    the (advanced) generator.
    """
    def ratio(prev: float, nxt: float, label: str) -> float:
        if prev <= 0.0:
            raise PropagationError(
                f"alive {label} has zero prior survival probability; "
                "the removal ratio is undefined")
        return nxt / prev

    out = iset.copy()
    for j in range(out.attacker_alive.size):
        if out.attacker_alive[j]:
            r = ratio(q_prev.q_attackers[j], q_next.q_attackers[j], f"attacker {j}")
            if rng.random() > r:
                out.attacker_alive[j] = False
    for k in range(out.defender_alive.size):
        if out.defender_alive[k]:
            r = ratio(q_prev.q_defenders[k], q_next.q_defenders[k], f"defender {k}")
            if rng.random() > r:
                out.defender_alive[k] = False
    if out.hvu_alive:
        r = ratio(q_prev.q_hvu, q_next.q_hvu, "hvu")
        if rng.random() > r:
            out.hvu_alive = False
    return out, rng
