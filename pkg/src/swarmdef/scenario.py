"""Engagement scenario definition, validation, and JSON (de)serialization.

A scenario is one top-level JSON object whose field names match
:class:`ScenarioConfig` exactly (snake_case); vectors are 3-element arrays
and agent lists are arrays of ``{"position": [..], "velocity": [..]}``.
Unknown fields are rejected (strict mode). All physical values are given in
consistent dimensionless units; there is no unit-conversion layer.

Only ``survival_threshold`` has a default (0.5). Every other parameter must
be present in the file so that a scenario document is a complete record of
an experiment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import IO, Any

import numpy as np

from .errors import ScenarioError

# Distances below this are clamped before any 1/r force evaluation.
SOFTENING_RADIUS = 1e-6

# Exact-integer binomial construction of the trajectory basis is only
# guaranteed well conditioned up to this order.
MAX_BERNSTEIN_ORDER = 30

_VEC_FIELDS = ("hvu_position",)
_AGENT_LIST_FIELDS = ("initial_attackers", "initial_defenders")


@dataclass(eq=False)
class ScenarioConfig:
    """All physical and numerical parameters of one engagement.

    Immutable by convention after loading; safe to share across workers.
    Use :func:`dataclasses.replace` to derive variants.
    """

    n_attackers: int
    n_defenders: int
    hvu_position: np.ndarray          # (3,)
    d0: float                         # attacker-attacker repulsion/attraction switch
    d1: float                         # attacker-attacker interaction cutoff
    s0: float                         # defender repulsion cutoff
    k_rep: float                      # attacker-attacker repulsion gain
    k_att: float                      # attacker-attacker attraction gain
    k_dref: float                     # defender repulsion gain
    leader_gain: float                # constant pull toward the HVU
    damping: float                    # velocity damping, 1/time
    lambda_a: float                   # attacker rate of fire, 1/time
    lambda_d: float                   # defender rate of fire, 1/time
    sigma_a: float                    # attacker weapon range parameter, length^2
    sigma_d: float                    # defender weapon range parameter, length^2
    dt: float
    n_steps: int
    u_max: float                      # per-component defender acceleration bound
    d_min: float                      # minimum defender pairwise separation
    bernstein_order: int
    initial_attackers: np.ndarray     # (N, 2, 3): [:, 0] positions, [:, 1] velocities
    initial_defenders: np.ndarray     # (M, 2, 3)
    rng_seed: int
    survival_threshold: float = 0.5

    def __post_init__(self):
        self.hvu_position = np.asarray(self.hvu_position, dtype=float)
        self.initial_attackers = np.asarray(self.initial_attackers, dtype=float)
        self.initial_defenders = np.asarray(self.initial_defenders, dtype=float)

    @property
    def t_f(self) -> float:
        return self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        """The discrete grid t_k = k*dt, k = 0..n_steps."""
        return np.arange(self.n_steps + 1) * self.dt

    def attacker_initial_state(self) -> tuple[np.ndarray, np.ndarray]:
        """Initial attacker (positions, velocities), each (N, 3)."""
        return self.initial_attackers[:, 0].copy(), self.initial_attackers[:, 1].copy()

    def defender_initial_state(self) -> tuple[np.ndarray, np.ndarray]:
        """Initial defender (positions, velocities), each (M, 3)."""
        return self.initial_defenders[:, 0].copy(), self.initial_defenders[:, 1].copy()

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScenarioConfig):
            return NotImplemented
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray):
                if not (isinstance(b, np.ndarray) and a.shape == b.shape and np.array_equal(a, b)):
                    return False
            elif a != b:
                return False
        return True

    def validate(self) -> "ScenarioConfig":
        """Check every config invariant; raise ScenarioError naming the first violation."""
        def positive(name, value):
            if not (np.isfinite(value) and value > 0):
                raise ScenarioError(f"must be > 0, got {value}", field=name)

        def nonnegative(name, value):
            if not (np.isfinite(value) and value >= 0):
                raise ScenarioError(f"must be >= 0, got {value}", field=name)

        if self.n_attackers < 1:
            raise ScenarioError("must be a positive integer", field="n_attackers")
        if self.n_defenders < 1:
            raise ScenarioError("must be a positive integer", field="n_defenders")
        positive("d0", self.d0)
        if not self.d0 < self.d1:
            raise ScenarioError(
                f"d0 < d1 violated (d0={self.d0}, d1={self.d1})", field="d1")
        positive("s0", self.s0)
        positive("dt", self.dt)
        positive("u_max", self.u_max)
        nonnegative("d_min", self.d_min)
        for name in ("k_rep", "k_att", "k_dref", "leader_gain", "damping",
                     "lambda_a", "lambda_d"):
            nonnegative(name, getattr(self, name))
        # Zero sigma would make the damage rate 0/0 at contact; require > 0.
        positive("sigma_a", self.sigma_a)
        positive("sigma_d", self.sigma_d)
        if self.n_steps < 1:
            raise ScenarioError("must be a positive integer", field="n_steps")
        if not 0 < self.survival_threshold < 1:
            raise ScenarioError(
                f"must lie in (0, 1), got {self.survival_threshold}",
                field="survival_threshold")
        if not 2 <= self.bernstein_order <= MAX_BERNSTEIN_ORDER:
            raise ScenarioError(
                f"must lie in [2, {MAX_BERNSTEIN_ORDER}], got {self.bernstein_order}",
                field="bernstein_order")
        if self.rng_seed < 0:
            raise ScenarioError("must be a non-negative integer", field="rng_seed")
        for name, count in (("initial_attackers", self.n_attackers),
                            ("initial_defenders", self.n_defenders)):
            arr = getattr(self, name)
            if arr.shape != (count, 2, 3):
                raise ScenarioError(
                    f"expected {count} agents with 3-vector position and velocity, "
                    f"got array of shape {arr.shape}", field=name)
            if not np.all(np.isfinite(arr)):
                raise ScenarioError("contains non-finite entries", field=name)
        if self.hvu_position.shape != (3,) or not np.all(np.isfinite(self.hvu_position)):
            raise ScenarioError("must be a finite 3-vector", field="hvu_position")
        return self


def _agent_list_to_array(raw: Any, field_name: str) -> np.ndarray:
    if not isinstance(raw, list):
        raise ScenarioError("must be an array of agents", field=field_name)
    out = np.zeros((len(raw), 2, 3))
    for i, entry in enumerate(raw):
        path = f"{field_name}[{i}]"
        if not isinstance(entry, dict):
            raise ScenarioError('must be {"position": [..], "velocity": [..]}', field=path)
        extra = set(entry) - {"position", "velocity"}
        if extra:
            raise ScenarioError(f"unknown fields {sorted(extra)}", field=path)
        for j, key in enumerate(("position", "velocity")):
            if key not in entry:
                raise ScenarioError(f'missing "{key}"', field=path)
            vec = entry[key]
            if not (isinstance(vec, list) and len(vec) == 3):
                raise ScenarioError("must be a 3-element array", field=f"{path}.{key}")
            out[i, j] = vec
    return out


def load_scenario(source: str | Path | IO[bytes] | bytes) -> ScenarioConfig:
    """Parse and validate a scenario document.

    ``source`` may be a path, raw bytes, or an open binary stream.
    Raises ScenarioError with a field path on malformed input, and on any
    violated invariant.
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
        raise ScenarioError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError("top level must be a JSON object")

    known = {f.name for f in fields(ScenarioConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ScenarioError(f"unknown fields {sorted(unknown)} (strict mode)")
    missing = known - set(doc) - {"survival_threshold"}
    if missing:
        raise ScenarioError(f"missing required fields {sorted(missing)}")

    kwargs: dict[str, Any] = {}
    for name, value in doc.items():
        if name in _AGENT_LIST_FIELDS:
            kwargs[name] = _agent_list_to_array(value, name)
        elif name in _VEC_FIELDS:
            if not (isinstance(value, list) and len(value) == 3):
                raise ScenarioError("must be a 3-element array", field=name)
            kwargs[name] = np.asarray(value, dtype=float)
        elif not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ScenarioError(f"must be a number, got {value!r}", field=name)
        else:
            kwargs[name] = value
    try:
        cfg = ScenarioConfig(**kwargs)
    except TypeError as exc:
        raise ScenarioError(str(exc)) from exc
    return cfg.validate()


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    """Plain-JSON representation, inverse of load_scenario."""
    doc: dict[str, Any] = {}
    for f in fields(ScenarioConfig):
        value = getattr(cfg, f.name)
        if f.name in _AGENT_LIST_FIELDS:
            doc[f.name] = [
                {"position": list(agent[0]), "velocity": list(agent[1])}
                for agent in value
            ]
        elif isinstance(value, np.ndarray):
            doc[f.name] = value.tolist()
        else:
            doc[f.name] = value
    return doc


def save_scenario(cfg: ScenarioConfig, dest: str | Path | IO[str]) -> None:
    """Write cfg as a scenario JSON document (round-trips through load_scenario)."""
    text = json.dumps(scenario_to_dict(cfg), indent=2) + "\n"
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text)
    else:
        dest.write(text)


def default_initializer(
    n: int,
    radius: float,
    center,
    seed: int,
    min_separation: float = 0.0,
    max_attempts: int = 10000,
) -> tuple[np.ndarray, np.ndarray]:
    """Sample n agent positions uniformly inside a sphere, velocities zero.

    Positions are drawn deterministically from ``seed`` and kept pairwise at
    least ``min_separation`` apart by rejection. Returns (positions,
    velocities), each (n, 3). Raises ScenarioError when rejection cannot
    place a point within ``max_attempts`` tries.
    """
    if n < 1:
        raise ScenarioError("n must be >= 1")
    if radius <= 0:
        raise ScenarioError("radius must be > 0")
    center = np.asarray(center, dtype=float)
    rng = np.random.default_rng(seed)
    placed = np.zeros((n, 3))
    count = 0
    for attempt in range(max_attempts * n):
        direction = rng.normal(size=3)
        norm = np.linalg.norm(direction)
        if norm == 0.0:
            continue
        r = radius * rng.random() ** (1.0 / 3.0)
        candidate = center + direction / norm * r
        if count and min_separation > 0.0:
            if np.min(np.linalg.norm(placed[:count] - candidate, axis=1)) < min_separation:
                continue
        placed[count] = candidate
        count += 1
        if count == n:
            return placed, np.zeros((n, 3))
    raise ScenarioError(
        f"could not place {n} points with separation {min_separation} inside "
        f"radius {radius} after {max_attempts * n} attempts; increase the radius")
