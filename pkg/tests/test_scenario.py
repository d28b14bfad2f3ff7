import io
import json

import numpy as np
import pytest

from swarmdef import ScenarioConfig, default_initializer, load_scenario, save_scenario
from swarmdef.errors import ScenarioError
from swarmdef.scenario import scenario_to_dict

from support import make_config, replace_config


def test_roundtrip_through_file(tmp_path):
    cfg = make_config()
    path = tmp_path / "scen.json"
    save_scenario(cfg, path)
    again = load_scenario(path)
    assert again == cfg


def test_roundtrip_through_stream_and_bytes():
    cfg = make_config(rng_seed=123, survival_threshold=0.25)
    buf = io.StringIO()
    save_scenario(cfg, buf)
    raw = buf.getvalue().encode()
    assert load_scenario(raw) == cfg
    assert load_scenario(io.BytesIO(raw)) == cfg


def test_save_is_deterministic(tmp_path):
    cfg = make_config()
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_scenario(cfg, a)
    save_scenario(cfg, b)
    assert a.read_bytes() == b.read_bytes()


def test_times_grid_and_horizon():
    cfg = make_config(dt=0.25, n_steps=8)
    assert cfg.t_f == 2.0
    np.testing.assert_allclose(cfg.times, 0.25 * np.arange(9))
    assert cfg.times.shape == (9,)


def test_initial_state_accessors_return_copies():
    cfg = make_config()
    pos, vel = cfg.attacker_initial_state()
    pos[0, 0] = 999.0
    assert cfg.initial_attackers[0, 0, 0] != 999.0
    assert vel.shape == (2, 3)


def test_unknown_field_rejected():
    doc = scenario_to_dict(make_config())
    doc["typo_field"] = 1.0
    with pytest.raises(ScenarioError, match="typo_field"):
        load_scenario(json.dumps(doc).encode())


def test_missing_field_rejected():
    doc = scenario_to_dict(make_config())
    del doc["lambda_a"]
    with pytest.raises(ScenarioError, match="lambda_a"):
        load_scenario(json.dumps(doc).encode())


def test_survival_threshold_is_the_only_default():
    doc = scenario_to_dict(make_config())
    del doc["survival_threshold"]
    cfg = load_scenario(json.dumps(doc).encode())
    assert cfg.survival_threshold == 0.5


def test_malformed_agent_entry_reports_path():
    doc = scenario_to_dict(make_config())
    doc["initial_defenders"][0]["position"] = [1.0, 2.0]   # not a 3-vector
    with pytest.raises(ScenarioError, match=r"initial_defenders\[0\].position"):
        load_scenario(json.dumps(doc).encode())


def test_non_numeric_scalar_rejected():
    doc = scenario_to_dict(make_config())
    doc["dt"] = "0.2"
    with pytest.raises(ScenarioError, match="dt"):
        load_scenario(json.dumps(doc).encode())


def test_invalid_json_rejected():
    with pytest.raises(ScenarioError, match="invalid JSON"):
        load_scenario(b"{not json")


@pytest.mark.parametrize("field,value,fragment", [
    ("d1", 2.0, "d0 < d1"),
    ("dt", 0.0, "dt"),
    ("sigma_a", 0.0, "sigma_a"),
    ("sigma_d", -1.0, "sigma_d"),
    ("n_attackers", 0, "n_attackers"),
    ("survival_threshold", 0.0, "survival_threshold"),
    ("survival_threshold", 1.0, "survival_threshold"),
    ("bernstein_order", 1, "bernstein_order"),
    ("bernstein_order", 31, "bernstein_order"),
    ("lambda_a", -0.1, "lambda_a"),
    ("rng_seed", -1, "rng_seed"),
])
def test_validate_rejects(field, value, fragment):
    cfg = replace_config(make_config(), **{field: value})
    with pytest.raises(ScenarioError, match=fragment):
        cfg.validate()


def test_validate_checks_agent_array_shape():
    cfg = replace_config(make_config(), n_attackers=3)   # arrays still hold 2
    with pytest.raises(ScenarioError, match="initial_attackers"):
        cfg.validate()


def test_equality_ignores_nothing():
    a = make_config()
    b = make_config()
    assert a == b
    c = make_config(d0=3.5)
    assert a != c
    d = replace_config(make_config(), initial_attackers=a.initial_attackers + 1e-12)
    assert a != d


def test_default_initializer_deterministic_and_inside_ball():
    p1, v1 = default_initializer(50, radius=5.0, center=[1.0, 2.0, 3.0], seed=9)
    p2, _ = default_initializer(50, radius=5.0, center=[1.0, 2.0, 3.0], seed=9)
    np.testing.assert_array_equal(p1, p2)
    assert np.all(np.linalg.norm(p1 - np.array([1.0, 2.0, 3.0]), axis=1) <= 5.0)
    assert np.array_equal(v1, np.zeros((50, 3)))
    p3, _ = default_initializer(50, radius=5.0, center=[1.0, 2.0, 3.0], seed=10)
    assert not np.array_equal(p1, p3)


def test_default_initializer_enforces_separation():
    pos, _ = default_initializer(12, radius=6.0, center=np.zeros(3), seed=3,
                                 min_separation=1.5)
    d = np.linalg.norm(pos[:, None] - pos[None, :], axis=2)
    np.fill_diagonal(d, np.inf)
    assert d.min() >= 1.5


def test_default_initializer_impossible_packing():
    with pytest.raises(ScenarioError, match="increase the radius"):
        default_initializer(40, radius=0.5, center=np.zeros(3), seed=0,
                            min_separation=2.0, max_attempts=50)


def test_constructor_coerces_arrays():
    cfg = make_config(hvu_position=[0, 0, 0])
    assert isinstance(cfg.hvu_position, np.ndarray)
    assert cfg.hvu_position.dtype == float
