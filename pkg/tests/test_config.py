"""Configuration parsing tests: key=value syntax, unit-suffixed powers,
defaults, overrides, validation, and canonical echo."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from debrisense.config import (
    ConfigError,
    ScenarioConfig,
    SweepSpec,
    config_echo,
    default_config_text,
    load_config,
    parse_kv_text,
    parse_power,
)


# ------------------------------------------------------------- parsing

def test_parse_kv_text_basics():
    text = "a = 1\n# comment\nb=two  # trailing\n\n  c  =  3,4 \n"
    assert parse_kv_text(text) == {"a": "1", "b": "two", "c": "3,4"}


def test_parse_kv_text_rejects_duplicates_with_line_number():
    with pytest.raises(ConfigError, match="line 3"):
        parse_kv_text("a = 1\nb = 2\na = 3\n")


def test_parse_kv_text_rejects_malformed_lines():
    with pytest.raises(ConfigError, match="line 2"):
        parse_kv_text("a = 1\nnot a pair\n")
    with pytest.raises(ConfigError):
        parse_kv_text(" = 1\n")  # empty key


def test_parse_power_units():
    assert_allclose(parse_power("20 dBm"), 0.1, rtol=1e-12)
    assert_allclose(parse_power("30 dBW"), 1000.0, rtol=1e-12)
    assert_allclose(parse_power("0 dBW"), 1.0, rtol=0)
    assert_allclose(parse_power("2.5 W"), 2.5, rtol=0)
    assert_allclose(parse_power("2.5"), 2.5, rtol=0)
    assert_allclose(parse_power("-10 dbm"), 1e-4, rtol=1e-12)
    with pytest.raises(ConfigError):
        parse_power("loud")


# ------------------------------------------------------------- loading

def test_defaults_load_without_a_file():
    scenario, spec = load_config()
    g = scenario.geometry
    assert_allclose(g.rx_position, (0.25, 0.0, 0.0), rtol=0)
    assert g.K_bar == 128 and g.f == 100e9
    assert scenario.probe.N_tx == 64 and scenario.probe.M == 32
    assert scenario.probe.T == 20 and scenario.probe.K == 6
    assert scenario.l_hat == 6 and scenario.threshold_rel == 1e-3
    assert spec.mu_grid == (0.06, 0.08, 0.1)
    assert spec.k_grid == (6,)
    assert spec.trials_per_point == 200 and spec.master_seed == 1
    assert len(spec.power_grid) == 5
    assert_allclose(spec.power_grid[0], 10 ** 0.5, rtol=1e-12)  # 5 dBW


def test_default_config_text_round_trips():
    import tempfile
    with tempfile.NamedTemporaryFile("w", suffix=".cfg", delete=False) as fh:
        fh.write(default_config_text())
        path = fh.name
    assert config_echo(*load_config(path)) == config_echo(*load_config())


def test_file_values_override_defaults(tmp_path):
    p = tmp_path / "s.cfg"
    p.write_text("k_training = 8\nmu_grid = 0.05\npower_grid = 1 W, 2 W\n")
    scenario, spec = load_config(p)
    assert scenario.probe.K == 8
    assert spec.mu_grid == (0.05,)
    assert spec.power_grid == (1.0, 2.0)


def test_overrides_beat_file_values(tmp_path):
    p = tmp_path / "s.cfg"
    p.write_text("master_seed = 7\n")
    _, spec = load_config(p, overrides={"master_seed": "9"})
    assert spec.master_seed == 9


def test_unknown_key_is_rejected(tmp_path):
    p = tmp_path / "s.cfg"
    p.write_text("warp_factor = 9\n")
    with pytest.raises(ConfigError, match="warp_factor"):
        load_config(p)


def test_domain_errors_surface_as_config_errors(tmp_path):
    cases = [
        "k_training = 200\n",          # K > K_bar
        "mu_grid = -0.1\n",            # negative ridge
        "trials_per_point = 0\n",
        "debris_box_min = 1,0,0\ndebris_box_max = 0,0,0\n",
        "rx_position = 0,0,0\n",       # collocated with tx
        "power_grid =\n",              # empty grid
        "reflection_mode = shiny\n",
    ]
    for body in cases:
        p = tmp_path / "bad.cfg"
        p.write_text(body)
        with pytest.raises(ConfigError):
            load_config(p)


def test_vector_and_list_values(tmp_path):
    p = tmp_path / "s.cfg"
    p.write_text(
        "debris_positions = 0.1,0.0,0.6; 0.2,0.1,0.7\n"
        "tx_array_axis = 0,1,0\n"
        "k_grid = 4, 8\n"
    )
    scenario, spec = load_config(p)
    assert len(scenario.geometry.debris_positions) == 2
    assert_allclose(scenario.geometry.debris_positions[1], (0.2, 0.1, 0.7),
                    rtol=0)
    assert_allclose(scenario.geometry.tx_array_axis, (0, 1, 0), rtol=0)
    assert spec.k_grid == (4, 8)


def test_missing_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")


# ---------------------------------------------------------- structures

def test_scenario_debris_box_validation():
    scenario, _ = load_config()
    lo, hi = scenario.debris_box
    assert np.all(np.asarray(hi) >= np.asarray(lo))
    with pytest.raises(ValueError):
        lo[0] = 99.0  # frozen


def test_sweep_spec_validation():
    ok = dict(power_grid=(1.0,), mu_grid=(0.1,), k_grid=(4,),
              trials_per_point=5)
    SweepSpec(**ok)
    with pytest.raises(ValueError):
        SweepSpec(**{**ok, "power_grid": ()})
    with pytest.raises(ValueError):
        SweepSpec(**{**ok, "mu_grid": (0.0,)})
    with pytest.raises(ValueError):
        SweepSpec(**{**ok, "k_grid": (0,)})
    with pytest.raises(ValueError):
        SweepSpec(**{**ok, "trials_per_point": 0})


def test_scenario_als_config_carries_solver_settings():
    scenario, _ = load_config()
    cfg = scenario.als_config(mu=0.08, seed=3)
    assert cfg.mu == 0.08 and cfg.seed == 3
    assert cfg.L_hat == scenario.l_hat
    assert cfg.T_max == scenario.t_max
    assert cfg.restarts == scenario.restarts
    assert cfg.init == scenario.init


# ---------------------------------------------------------------- echo

def test_config_echo_is_canonical_across_spellings(tmp_path):
    a = tmp_path / "a.cfg"
    a.write_text("power_grid = 0 dBW, 10 dBW\n")
    b = tmp_path / "b.cfg"
    b.write_text("power_grid = 1, 10 W\n")
    ea = config_echo(*load_config(a))
    eb = config_echo(*load_config(b))
    assert ea == eb
    assert ea["power_grid"] == "1.0, 10.0"


def test_config_echo_covers_every_config_key():
    scenario, spec = load_config()
    echo = config_echo(scenario, spec)
    from debrisense.config import _DEFAULTS
    assert set(echo) == set(_DEFAULTS)
    assert all(isinstance(v, str) for v in echo.values())
