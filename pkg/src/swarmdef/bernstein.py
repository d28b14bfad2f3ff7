"""Bernstein-polynomial trajectories for the defender team.

A defender path on [0, t_f] is a degree-L Bernstein (Bezier) curve; its
control points are the optimizer's decision variables. Velocities and
accelerations come from a constant differentiation matrix applied to the
control polygon, so the control input u = d2s/dt2 is recovered
algebraically and defenders never need state integration.

Row-vector convention: a control polygon c (length L+1) maps to its
derivative polygon c @ D, in the same degree-L basis.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO

import numpy as np

from .errors import ConfigurationError, ScenarioError
from .scenario import MAX_BERNSTEIN_ORDER

# Above this order the closed-form binomial evaluation gives way to the
# triangle recurrence; both are exact for polynomials but the recurrence
# is better conditioned at high degree.
_DIRECT_FORMULA_MAX_ORDER = 15


def _check_horizon(t: float, t_f: float) -> None:
    if not 0.0 <= t <= t_f:
        raise ValueError(f"time {t} outside trajectory horizon [0, {t_f}]")


def basis_row(order: int, t: float, t_f: float) -> np.ndarray:
    """All degree-``order`` basis values at time t, shape (order+1,)."""
    if not 0 <= order <= MAX_BERNSTEIN_ORDER:
        raise ValueError(f"order must lie in [0, {MAX_BERNSTEIN_ORDER}]")
    if t_f <= 0:
        raise ValueError("horizon must be positive")
    _check_horizon(t, t_f)
    u = t / t_f
    if order <= _DIRECT_FORMULA_MAX_ORDER:
        j = np.arange(order + 1)
        comb = np.array([math.comb(order, int(i)) for i in j], dtype=float)
        return comb * u ** j * (1.0 - u) ** (order - j)
    # Triangle recurrence: raise the degree one level at a time.
    row = np.array([1.0])
    for level in range(1, order + 1):
        nxt = np.zeros(level + 1)
        nxt[: level] = (1.0 - u) * row
        nxt[1:] += u * row
        row = nxt
    return row


def basis(j: int, order: int, t: float, t_f: float) -> float:
    """Single Bernstein basis value b_{j,order}(t) on [0, t_f]."""
    if not 0 <= j <= order:
        raise ValueError(f"basis index {j} outside [0, {order}]")
    return float(basis_row(order, t, t_f)[j])


@dataclass
class DiffMatrix:
    """Differentiation matrix d for a fixed order and horizon, with d2 cached.

    For any control polygon c, c @ d is the control polygon of the time
    derivative (same degree, via degree elevation), and c @ d2 that of the
    second derivative.
    """

    d: np.ndarray   # (L+1, L+1)
    d2: np.ndarray  # (L+1, L+1)
    order: int
    horizon: float


def diff_matrix(order: int, t_f: float) -> DiffMatrix:
    """Build the degree-preserving differentiation matrix for [0, t_f].

    Composed of the exact derivative map to degree order-1 followed by
    degree elevation back to ``order``; orders below 2 are rejected because
    control recovery needs two derivatives.
    """
    if order < 2:
        raise ConfigurationError(
            f"trajectory order must be >= 2 for control recovery, got {order}")
    if order > MAX_BERNSTEIN_ORDER:
        raise ConfigurationError(
            f"trajectory order must be <= {MAX_BERNSTEIN_ORDER}, got {order}")
    if t_f <= 0:
        raise ConfigurationError("horizon must be positive")
    L = order
    deriv = np.zeros((L + 1, L))     # c (1, L+1) @ deriv -> degree L-1 polygon
    for j in range(L):
        deriv[j + 1, j] = L / t_f
        deriv[j, j] = -L / t_f
    elev = np.zeros((L, L + 1))      # degree L-1 polygon @ elev -> degree L
    for j in range(L + 1):
        if 1 <= j:
            elev[j - 1, j] += j / L
        if j <= L - 1:
            elev[j, j] += (L - j) / L
    d = deriv @ elev
    return DiffMatrix(d=d, d2=d @ d, order=L, horizon=t_f)


def elevate(points: np.ndarray, target_order: int) -> np.ndarray:
    """Raise a control polygon (L+1, dims) to a higher order, curve unchanged."""
    points = np.asarray(points, dtype=float)
    order = points.shape[0] - 1
    if target_order < order:
        raise ValueError("target order below current order")
    for L in range(order + 1, target_order + 1):
        out = np.zeros((L + 1,) + points.shape[1:])
        for j in range(L + 1):
            if j >= 1:
                out[j] += (j / L) * points[j - 1]
            if j <= L - 1:
                out[j] += ((L - j) / L) * points[j]
        points = out
    return points


@dataclass
class ControlPoints:
    """Control polygons for all defenders: points (M, L+1, 3) on [0, horizon]."""

    points: np.ndarray
    order: int
    horizon: float

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 3 or self.points.shape[1] != self.order + 1 \
                or self.points.shape[2] != 3:
            raise ScenarioError(
                f"control points must have shape (M, {self.order + 1}, 3), "
                f"got {self.points.shape}")
        if not np.all(np.isfinite(self.points)):
            raise ScenarioError("control points contain non-finite entries")
        if self.horizon <= 0:
            raise ScenarioError("control-point horizon must be positive")

    @property
    def n_defenders(self) -> int:
        return self.points.shape[0]

    def copy(self) -> "ControlPoints":
        return ControlPoints(self.points.copy(), self.order, self.horizon)


def eval_state(
    cp: ControlPoints,
    t: float,
    dm: DiffMatrix | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Defender (position, velocity, control) at time t, each (M, 3).

    Velocity uses the differentiation matrix, control its square; pass a
    prebuilt matrix to amortize construction over many evaluations.
    """
    _check_horizon(t, cp.horizon)
    if dm is None:
        dm = diff_matrix(cp.order, cp.horizon)
    elif dm.order != cp.order or dm.horizon != cp.horizon:
        raise ConfigurationError(
            "differentiation matrix order/horizon does not match control points")
    row = basis_row(cp.order, t, cp.horizon)
    pos = np.einsum("j,mjd->md", row, cp.points)
    vel = np.einsum("j,mjd->md", dm.d @ row, cp.points)
    control = np.einsum("j,mjd->md", dm.d2 @ row, cp.points)
    return pos, vel, control


def load_control_points(source: str | Path | IO[bytes] | bytes) -> ControlPoints:
    """Read control points from JSON: {"order", "horizon", "points"}.

    "points" is an array over defenders of arrays of order+1 3-vectors.
    """
    if isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    elif isinstance(source, bytes):
        data = source
    else:
        data = source.read()
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid control-points JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("control-points document must be a JSON object")
    unknown = set(doc) - {"order", "horizon", "points"}
    if unknown:
        raise ScenarioError(f"unknown control-points fields {sorted(unknown)}")
    for key in ("order", "horizon", "points"):
        if key not in doc:
            raise ScenarioError(f'control-points document missing "{key}"')
    order, horizon, raw = doc["order"], doc["horizon"], doc["points"]
    if not isinstance(order, int) or isinstance(order, bool):
        raise ScenarioError("must be an integer", field="order")
    if not isinstance(horizon, (int, float)) or isinstance(horizon, bool):
        raise ScenarioError("must be a number", field="horizon")
    if not isinstance(raw, list) or not raw:
        raise ScenarioError("must be a non-empty array", field="points")
    for m, polygon in enumerate(raw):
        if not (isinstance(polygon, list) and len(polygon) == order + 1):
            raise ScenarioError(
                f"expected {order + 1} control points", field=f"points[{m}]")
        for j, vec in enumerate(polygon):
            if not (isinstance(vec, list) and len(vec) == 3):
                raise ScenarioError(
                    "must be a 3-element array", field=f"points[{m}][{j}]")
    return ControlPoints(np.asarray(raw, dtype=float), order, float(horizon))


def save_control_points(cp: ControlPoints, dest: str | Path | IO[str]) -> None:
    """Write control points as JSON; round-trips through load_control_points."""
    doc = {
        "order": cp.order,
        "horizon": cp.horizon,
        "points": [[list(point) for point in polygon] for polygon in cp.points],
    }
    text = json.dumps(doc, indent=2) + "\n"
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text)
    else:
        dest.write(text)
