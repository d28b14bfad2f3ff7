"""Figure rendering for the CLI report paths.

Every report command can write a PNG next to its delimited output. The
non-interactive Agg backend is forced at import so rendering works headless
and produces identical bytes for identical inputs.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from .engagement import EngagementResult, Model  # noqa: E402
from .experiments import ComparisonReport, TradeoffRow  # noqa: E402
from .montecarlo import MCStats  # noqa: E402
from .optimizer import OptimizationTrace  # noqa: E402
from .scenario import ScenarioConfig  # noqa: E402

_MODEL_LABEL = {
    Model.DECOUPLED: "p1 (decoupled)",
    Model.WEIGHTED: "p2 (weighted)",
    Model.THRESHOLD: "p3 (threshold)",
}
_MODEL_COLOR = {
    Model.DECOUPLED: "tab:blue",
    Model.WEIGHTED: "tab:orange",
    Model.THRESHOLD: "tab:green",
}
_DPI = 150


def _save(fig, path: str | Path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def engagement_figure(result: EngagementResult, cfg: ScenarioConfig,
                      path: str | Path) -> None:
    """Top-down trajectories beside the survival series of one run."""
    fig, (ax_map, ax_q) = plt.subplots(1, 2, figsize=(11, 4.5))

    att = np.stack([s.attacker_pos for s in result.state_series])  # (K+1, N, 3)
    dfn = np.stack([s.defender_pos for s in result.state_series])
    for i in range(att.shape[1]):
        ax_map.plot(att[:, i, 0], att[:, i, 1], color="tab:red", lw=0.8,
                    label="attacker" if i == 0 else None)
        ax_map.plot(att[-1, i, 0], att[-1, i, 1], ".", color="tab:red", ms=4)
    for k in range(dfn.shape[1]):
        ax_map.plot(dfn[:, k, 0], dfn[:, k, 1], color="tab:blue", lw=1.2,
                    label="defender" if k == 0 else None)
        ax_map.plot(dfn[-1, k, 0], dfn[-1, k, 1], "s", color="tab:blue", ms=4)
    hvu = cfg.hvu_position
    ax_map.plot(hvu[0], hvu[1], "*", color="black", ms=12, label="HVU")
    ax_map.set_xlabel("x")
    ax_map.set_ylabel("y")
    ax_map.set_title("trajectories (top view)")
    ax_map.legend(loc="best", fontsize=8)
    ax_map.set_aspect("equal", adjustable="datalim")

    t = cfg.times
    ax_q.plot(t, result.q0_series(), color="black", lw=1.5, label="HVU")
    ax_q.plot(t, result.mean_attacker_q(), color="tab:red", lw=1.0,
              label="attackers (mean)")
    ax_q.plot(t, result.mean_defender_q(), color="tab:blue", lw=1.0,
              label="defenders (mean)")
    ax_q.set_xlabel("time")
    ax_q.set_ylabel("survival probability")
    ax_q.set_ylim(-0.02, 1.02)
    ax_q.set_title("survival")
    ax_q.legend(loc="best", fontsize=8)
    _save(fig, path)


def mc_figure(stats: MCStats, cfg: ScenarioConfig, path: str | Path) -> None:
    """Ensemble survival frequencies with the binomial uncertainty band."""
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    t = cfg.times
    ax.plot(t, stats.hvu_frequency, color="black", lw=1.5, label="HVU frequency")
    ax.fill_between(t, stats.hvu_frequency - stats.hvu_halfwidth,
                    stats.hvu_frequency + stats.hvu_halfwidth,
                    color="black", alpha=0.15, lw=0)
    ax.plot(t, stats.attacker_alive_fraction, color="tab:red", lw=1.0,
            label="attackers alive")
    ax.plot(t, stats.defender_alive_fraction, color="tab:blue", lw=1.0,
            label="defenders alive")
    ax.set_xlabel("time")
    ax.set_ylabel("fraction")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(f"stochastic ensemble ({stats.n_runs} runs)")
    ax.legend(loc="best", fontsize=8)
    _save(fig, path)


def comparison_figure(report: ComparisonReport, path: str | Path) -> None:
    """HVU survival under each model against the ensemble estimate."""
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    t = report.times
    for model in Model:
        ax.plot(t, report.q0[model], color=_MODEL_COLOR[model], lw=1.3,
                label=_MODEL_LABEL[model])
    ax.plot(t, report.mc.hvu_frequency, color="black", lw=1.5, ls="--",
            label=f"stochastic ({report.mc.n_runs} runs)")
    ax.fill_between(t, report.mc.hvu_frequency - report.mc.hvu_halfwidth,
                    report.mc.hvu_frequency + report.mc.hvu_halfwidth,
                    color="black", alpha=0.15, lw=0)
    ax.set_xlabel("time")
    ax.set_ylabel("HVU survival")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title("model comparison")
    ax.legend(loc="best", fontsize=8)
    _save(fig, path)


def trace_figure(trace: OptimizationTrace, path: str | Path) -> None:
    """Penalized objective and raw cost over accepted iterates."""
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    idx = np.arange(len(trace.iterates))
    ax.plot(idx, [it.penalized for it in trace.iterates], color="tab:blue",
            lw=1.3, label="penalized objective")
    ax.plot(idx, [it.cost for it in trace.iterates], color="tab:orange",
            lw=1.0, label="cost")
    ax.set_xlabel("accepted iterate")
    ax.set_ylabel("objective")
    ax.set_title("optimization progress")
    ax.legend(loc="best", fontsize=8)
    _save(fig, path)


def tradeoff_figure(rows: Sequence[TradeoffRow], path: str | Path) -> None:
    """Optimized cost versus team size, one line per model/asymmetry pair."""
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    groups: dict[tuple[Model, str], list[TradeoffRow]] = {}
    for row in rows:
        groups.setdefault((row.model, row.weapon_config), []).append(row)
    styles = {"A-type": "-", "B-type": "--", "symmetric": ":"}
    for (model, weapon), members in groups.items():
        members = sorted(members, key=lambda r: r.n_defenders)
        ax.plot([r.n_defenders for r in members], [r.cost for r in members],
                marker="o", ms=3.5, lw=1.2, ls=styles.get(weapon, "-"),
                color=_MODEL_COLOR[model],
                label=f"{_MODEL_LABEL[model]}, {weapon}")
    ax.set_xlabel("defenders")
    ax.set_ylabel("optimized cost J")
    ax.set_title("defense cost vs team size")
    ax.legend(loc="best", fontsize=8)
    _save(fig, path)
