"""Shared test helpers: config factory, independent oracles, invariant batteries.

The oracles deliberately avoid the library's vectorized code paths: plain
Python floats, math.erfc, and explicit loops, so agreement is evidence and
not tautology.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from swarmdef.scenario import ScenarioConfig


def make_config(**overrides) -> ScenarioConfig:
    """Small 2v1 engagement with forces and fire on; override freely."""
    base = dict(
        n_attackers=2,
        n_defenders=1,
        hvu_position=np.zeros(3),
        d0=3.0,
        d1=8.0,
        s0=6.0,
        k_rep=2.0,
        k_att=0.5,
        k_dref=3.0,
        leader_gain=1.5,
        damping=0.4,
        lambda_a=0.8,
        lambda_d=0.9,
        sigma_a=60.0,
        sigma_d=50.0,
        dt=0.2,
        n_steps=10,
        u_max=2.0,
        d_min=0.5,
        bernstein_order=3,
        initial_attackers=np.array([
            [[20.0, 2.0, 0.0], [0.0, 0.0, 0.0]],
            [[20.0, -2.0, 1.0], [0.0, 0.0, 0.0]],
        ]),
        initial_defenders=np.array([
            [[10.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
        ]),
        rng_seed=7,
    )
    base.update(overrides)
    return ScenarioConfig(**base).validate()


def replace_config(cfg: ScenarioConfig, **overrides) -> ScenarioConfig:
    """dataclasses.replace without re-validation (for boundary settings)."""
    return dataclasses.replace(cfg, **overrides)


# ---------------------------------------------------------------------------
# Straight-line recursion oracle: scalar reimplementation of one engagement
# with a stationary defender team, for any of the three weighting models.

def _phi(x: float) -> float:
    return math.erfc(x / math.sqrt(2.0))


def _f_inter(r, cfg):
    if r <= cfg.d0:
        return cfg.k_rep * (cfg.d0 / max(r, 1e-6) - 1.0)
    if r <= cfg.d1:
        return -cfg.k_att * 4.0 * (r - cfg.d0) * (cfg.d1 - r) / (cfg.d1 - cfg.d0) ** 2
    return 0.0


def _f_def(r, cfg):
    if r <= cfg.s0:
        return cfg.k_dref * (cfg.s0 / max(r, 1e-6) - 1.0)
    return 0.0


def _accel(x, v, att_w, def_w, defender_pos, cfg):
    """Force on every attacker; x, v are lists of 3-lists."""
    n = len(x)
    out = []
    for i in range(n):
        a = [0.0, 0.0, 0.0]
        for j in range(n):
            if j == i:
                continue
            dx = [x[i][c] - x[j][c] for c in range(3)]
            r = math.sqrt(sum(d * d for d in dx))
            mag = _f_inter(r, cfg)
            for c in range(3):
                a[c] += att_w[j] * mag * dx[c] / max(r, 1e-6)
        for k in range(len(defender_pos)):
            dx = [x[i][c] - defender_pos[k][c] for c in range(3)]
            r = math.sqrt(sum(d * d for d in dx))
            mag = _f_def(r, cfg)
            for c in range(3):
                a[c] += def_w[k] * mag * dx[c] / max(r, 1e-6)
        hx = [cfg.hvu_position[c] - x[i][c] for c in range(3)]
        hn = math.sqrt(sum(d * d for d in hx))
        if hn > 0.0:
            for c in range(3):
                a[c] += cfg.leader_gain * hx[c] / hn
        for c in range(3):
            a[c] -= cfg.damping * v[i][c]
        out.append(a)
    return out


def recursion_oracle(cfg: ScenarioConfig, model_name: str):
    """Forward recursion with a stationary defender team.

    Returns dict with per-step lists: q0, q_att (list per step), q_def,
    attacker positions/velocities, and final cost. model_name is one of
    "p1", "p2", "p3".
    """
    n, m = cfg.n_attackers, cfg.n_defenders
    x = [[float(c) for c in cfg.initial_attackers[i, 0]] for i in range(n)]
    v = [[float(c) for c in cfg.initial_attackers[i, 1]] for i in range(n)]
    defender_pos = [[float(c) for c in cfg.initial_defenders[k, 0]] for k in range(m)]

    q0 = 1.0
    q_att = [1.0] * n
    q_def = [1.0] * m
    alive_att = [True] * n
    alive_def = [True] * m
    alive_hvu = True

    hist = {"q0": [q0], "q_att": [list(q_att)], "q_def": [list(q_def)],
            "x": [[list(p) for p in x]], "v": [[list(p) for p in v]]}

    acc = _accel(x, v, [1.0] * n, [1.0] * m, defender_pos, cfg)
    dt = cfg.dt
    for _ in range(cfg.n_steps):
        # Damage rates at the current positions.
        att_rate = [[cfg.lambda_d * _phi(
            sum((x[i][c] - defender_pos[k][c]) ** 2 for c in range(3)) / cfg.sigma_d)
            for k in range(m)] for i in range(n)]
        def_rate = [[cfg.lambda_a * _phi(
            sum((x[i][c] - defender_pos[k][c]) ** 2 for c in range(3)) / cfg.sigma_a)
            for i in range(n)] for k in range(m)]
        hvu_rate = [cfg.lambda_a * _phi(
            sum((cfg.hvu_position[c] - x[i][c]) ** 2 for c in range(3)) / cfg.sigma_a)
            for i in range(n)]

        if model_name == "p3":
            sw_att = [1.0 if a else 0.0 for a in alive_att]
            sw_def = [1.0 if a else 0.0 for a in alive_def]
        else:
            sw_att, sw_def = list(q_att), list(q_def)

        q_att_next = [q_att[i] * math.prod(
            1.0 - att_rate[i][k] * sw_def[k] * dt for k in range(m)) for i in range(n)]
        q_def_next = [q_def[k] * math.prod(
            1.0 - def_rate[k][i] * sw_att[i] * dt for i in range(n)) for k in range(m)]
        q0_next = q0 * math.prod(
            1.0 - hvu_rate[i] * sw_att[i] * dt for i in range(n))

        if model_name == "p3":
            thr = cfg.survival_threshold
            alive_att = [alive_att[i] and q_att_next[i] > thr for i in range(n)]
            alive_def = [alive_def[k] and q_def_next[k] > thr for k in range(m)]
            alive_hvu = alive_hvu and q0_next > thr
            dw_att = [1.0 if a else 0.0 for a in alive_att]
            dw_def = [1.0 if a else 0.0 for a in alive_def]
        elif model_name == "p2":
            dw_att, dw_def = list(q_att_next), list(q_def_next)
        else:
            dw_att, dw_def = [1.0] * n, [1.0] * m

        x_new = [[x[i][c] + v[i][c] * dt + acc[i][c] * dt * dt / 2.0
                  for c in range(3)] for i in range(n)]
        v_pred = [[v[i][c] + acc[i][c] * dt for c in range(3)] for i in range(n)]
        acc_new = _accel(x_new, v_pred, dw_att, dw_def, defender_pos, cfg)
        v_new = [[v[i][c] + (acc[i][c] + acc_new[i][c]) * dt / 2.0
                  for c in range(3)] for i in range(n)]

        x, v, acc = x_new, v_new, acc_new
        q0, q_att, q_def = q0_next, q_att_next, q_def_next
        hist["q0"].append(q0)
        hist["q_att"].append(list(q_att))
        hist["q_def"].append(list(q_def))
        hist["x"].append([list(p) for p in x])
        hist["v"].append([list(p) for p in v])

    hist["cost"] = 1.0 - q0
    return hist


def hold_cp(cfg: ScenarioConfig, order: int | None = None):
    """Constant-polygon trajectories parking every defender at its start."""
    from swarmdef.bernstein import ControlPoints

    L = cfg.bernstein_order if order is None else order
    pos = cfg.initial_defenders[:, 0]
    return ControlPoints(np.repeat(pos[:, None, :], L + 1, axis=1), L, cfg.t_f)


# ---------------------------------------------------------------------------
# Invariant batteries shared by the unit tests and the acceptance gate.

def propagate_free(cfg: ScenarioConfig, n_steps: int, dt: float):
    """Drive verlet_step directly: all-ones weights, stationary defenders."""
    from swarmdef.dynamics import (
        AccelCache, EffectivenessWeights, attacker_accelerations, initial_state)
    from swarmdef.dynamics import verlet_step

    cfg = dataclasses.replace(cfg, dt=dt, n_steps=n_steps)
    state = initial_state(cfg)
    w = EffectivenessWeights.ones(cfg.n_attackers, cfg.n_defenders)
    cache = AccelCache(attacker_accelerations(state, w, cfg))
    dnext = (state.defender_pos.copy(), np.zeros_like(state.defender_vel))
    for _ in range(n_steps):
        state, cache = verlet_step(state, cache, w, dnext, cfg)
    return state


def verlet_error_ratio() -> float:
    """Richardson ratio |x_h - x_{h/2}| / |x_{h/2} - x_{h/4}|.

    2 for a first-order integrator, 4 for second order. Single attacker
    under leader pull and damping; defender parked outside its cutoff.
    """
    cfg = make_config(
        n_attackers=1, n_defenders=1, leader_gain=1.5, damping=0.3,
        lambda_a=0.0, lambda_d=0.0,
        initial_attackers=np.array([[[10.0, 0.0, 0.0], [0.0, 3.0, 0.0]]]),
        initial_defenders=np.array([[[100.0, 0.0, 0.0], [0.0, 0.0, 0.0]]]),
    )
    n, dt = 40, 0.05
    x1 = propagate_free(cfg, n, dt).attacker_pos
    x2 = propagate_free(cfg, 2 * n, dt / 2).attacker_pos
    x4 = propagate_free(cfg, 4 * n, dt / 4).attacker_pos
    return float(np.linalg.norm(x1 - x2) / np.linalg.norm(x2 - x4))


def force_equivariance_errors(seed: int = 0, trials: int = 5):
    """Max deviation from translation and rotation equivariance of the force."""
    from scipy.spatial.transform import Rotation

    from swarmdef.dynamics import EffectivenessWeights, SwarmState, attacker_accelerations

    rng = np.random.default_rng(seed)
    worst_t, worst_r = 0.0, 0.0
    for _ in range(trials):
        cfg = make_config(
            n_attackers=4, n_defenders=2,
            initial_attackers=rng.normal(scale=6.0, size=(4, 2, 3)),
            initial_defenders=rng.normal(scale=6.0, size=(2, 2, 3)),
        )
        w = EffectivenessWeights(rng.random(4), rng.random(2))
        st = SwarmState(
            cfg.initial_attackers[:, 0].copy(), cfg.initial_attackers[:, 1].copy(),
            cfg.initial_defenders[:, 0].copy(), cfg.initial_defenders[:, 1].copy(),
            cfg.hvu_position.copy(), 0)
        acc = attacker_accelerations(st, w, cfg)

        shift = rng.normal(scale=20.0, size=3)
        cfg_t = dataclasses.replace(cfg, hvu_position=cfg.hvu_position + shift)
        st_t = SwarmState(st.attacker_pos + shift, st.attacker_vel.copy(),
                          st.defender_pos + shift, st.defender_vel.copy(),
                          cfg_t.hvu_position.copy(), 0)
        worst_t = max(worst_t, float(np.max(np.abs(
            attacker_accelerations(st_t, w, cfg_t) - acc))))

        rot = Rotation.random(random_state=int(rng.integers(2**31))).as_matrix()
        cfg_r = dataclasses.replace(cfg, hvu_position=cfg.hvu_position @ rot.T)
        st_r = SwarmState(st.attacker_pos @ rot.T, st.attacker_vel @ rot.T,
                          st.defender_pos @ rot.T, st.defender_vel @ rot.T,
                          cfg_r.hvu_position.copy(), 0)
        worst_r = max(worst_r, float(np.max(np.abs(
            attacker_accelerations(st_r, w, cfg_r) - acc @ rot.T))))
    return worst_t, worst_r


def survival_battery(seed: int = 0, trials: int = 200):
    """Random-rate survival steps: check range and monotonicity.

    Returns the worst signed violation (positive = broken invariant).
    """
    from swarmdef.attrition import DamageRates, SurvivalVector, survival_step
    from swarmdef.dynamics import EffectivenessWeights

    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n, m = int(rng.integers(1, 6)), int(rng.integers(1, 5))
        dt = float(rng.uniform(0.01, 0.5))
        lim = 0.9 / dt   # keeps every survival factor in (0, 1]
        rates = DamageRates(
            att=rng.uniform(0.0, lim, size=(n, m)),
            on_def=rng.uniform(0.0, lim, size=(m, n)),
            hvu=rng.uniform(0.0, lim, size=n))
        q = SurvivalVector(
            q_hvu=float(rng.random()),
            q_attackers=rng.random(n),
            q_defenders=rng.random(m))
        w = EffectivenessWeights(rng.random(n), rng.random(m))
        q2 = survival_step(q, rates, w, dt)
        for prev, nxt in ((q.q_attackers, q2.q_attackers),
                          (q.q_defenders, q2.q_defenders),
                          (np.array([q.q_hvu]), np.array([q2.q_hvu]))):
            worst = max(worst, float(np.max(nxt - prev)))        # must not grow
            worst = max(worst, float(np.max(-nxt)))              # must stay >= 0
            worst = max(worst, float(np.max(nxt - 1.0)))         # must stay <= 1
    return worst


def bernstein_battery():
    """Partition of unity, endpoint interpolation, derivative vs central FD.

    Returns dict of worst-case absolute errors.
    """
    from swarmdef.bernstein import ControlPoints, basis_row, diff_matrix, eval_state

    rng = np.random.default_rng(42)
    out = {"partition": 0.0, "endpoint": 0.0, "derivative": 0.0}
    for order in (2, 3, 5, 8, 12, 20, 30):
        t_f = 3.0
        ts = np.linspace(0.0, t_f, 61)
        rows = np.stack([basis_row(order, t, t_f) for t in ts])
        out["partition"] = max(out["partition"], float(np.max(np.abs(
            rows.sum(axis=1) - 1.0))))
        # Endpoint rows are exact unit vectors.
        e0, ef = np.zeros(order + 1), np.zeros(order + 1)
        e0[0] = 1.0
        ef[-1] = 1.0
        out["endpoint"] = max(out["endpoint"],
                              float(np.max(np.abs(basis_row(order, 0.0, t_f) - e0))),
                              float(np.max(np.abs(basis_row(order, t_f, t_f) - ef))))

        pts = rng.normal(size=(2, order + 1, 3))
        cp = ControlPoints(points=pts, order=order, horizon=t_f)
        dm = diff_matrix(order, t_f)
        h = 1e-5
        for t in np.linspace(5 * h, t_f - 5 * h, 9):
            _, vel, _ = eval_state(cp, t, dm)
            pos_p, _, _ = eval_state(cp, t + h, dm)
            pos_m, _, _ = eval_state(cp, t - h, dm)
            fd = (pos_p - pos_m) / (2 * h)
            out["derivative"] = max(out["derivative"],
                                    float(np.max(np.abs(vel - fd))))
    return out


# ---------------------------------------------------------------------------
# Analytic state-distribution tree for a frozen-position 1v1 engagement.

def removal_tree_1v1(cfg: ScenarioConfig, n_steps: int):
    """Exact per-step marginal survival probabilities for 1v1, no motion.

    Tracks the joint distribution over (attacker alive, defender alive,
    HVU alive); transitions use the per-step hazards implied by the frozen
    geometry. Returns dict of lists indexed by step (0..n_steps):
    attacker/defender/HVU survival probability.
    """
    ax = cfg.initial_attackers[0, 0]
    dx = cfg.initial_defenders[0, 0]
    sep2 = float(np.sum((ax - dx) ** 2))
    hvu2 = float(np.sum((cfg.hvu_position - ax) ** 2))
    # Per-step survival factors for the target, given its killer is alive.
    s_att = 1.0 - cfg.lambda_d * _phi(sep2 / cfg.sigma_d) * cfg.dt
    s_def = 1.0 - cfg.lambda_a * _phi(sep2 / cfg.sigma_a) * cfg.dt
    s_hvu = 1.0 - cfg.lambda_a * _phi(hvu2 / cfg.sigma_a) * cfg.dt

    dist = {(True, True, True): 1.0}
    out = {"attacker": [1.0], "defender": [1.0], "hvu": [1.0]}
    for _ in range(n_steps):
        nxt: dict = {}
        for (a, d, h), p in dist.items():
            pa = s_att if (a and d) else 1.0     # attacker dies only to a live defender
            pd = s_def if (d and a) else 1.0
            ph = s_hvu if (h and a) else 1.0
            branches_a = [(True, pa), (False, 1.0 - pa)] if a else [(False, 1.0)]
            branches_d = [(True, pd), (False, 1.0 - pd)] if d else [(False, 1.0)]
            branches_h = [(True, ph), (False, 1.0 - ph)] if h else [(False, 1.0)]
            for a2, wa in branches_a:
                for d2, wd in branches_d:
                    for h2, wh in branches_h:
                        key = (a2, d2, h2)
                        nxt[key] = nxt.get(key, 0.0) + p * wa * wd * wh
        dist = nxt
        out["attacker"].append(sum(p for (a, _, _), p in dist.items() if a))
        out["defender"].append(sum(p for (_, d, _), p in dist.items() if d))
        out["hvu"].append(sum(p for (_, _, h), p in dist.items() if h))
    return out
