"""Scenario and sweep configuration."""
import dataclasses
from pathlib import Path

import pytest

from astars_nav.config import (ConfigError, ScenarioConfig, SweepSpec, apply_sweep_value, config_as_dict,
                               config_from_dict, load_config, load_sweep_spec)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_empty_is_default():
    assert config_from_dict({}) == ScenarioConfig()


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.toml") if not p.name.startswith("sweep")))
def test_shipped_scenarios_load(name):
    cfg = load_config(CONFIGS / name)
    assert cfg.trials >= 1


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("sweep_*.toml")))
def test_shipped_sweeps_load(name):
    spec = load_sweep_spec(CONFIGS / name)
    assert len(spec.values) >= 2


@pytest.mark.parametrize("data, match", [
    ({"bogus": 1}, "unknown top-level"),
    ({"errors": {"noise": 0.1}}, "unknown key"),
    ({"trials": 0}, "trials"),
    ({"trials": 1.5}, "integer"),
    ({"errors": {"beam_error": 1}}, "true or false"),
    ({"constellation": {"count": 3}}, "count"),
    ({"errors": {"meas_noise_std": -1.0}}, ">= 0"),
    ({"errors": {"ambiguity_mode": "float"}}, "ambiguity_mode"),
    ({"clocks": {"gamma_sign": "up"}}, "gamma_sign"),
    ({"receivers": [{"name": "a", "position": [1, 2]}]}, "three coordinates"),
    ({"receivers": [{"name": "a", "position": [1, 2, 3], "mode": "X"}]}, "mode"),
    ({"receivers": [{"name": "a", "position": [1, 2, 3]}, {"name": "a", "position": [4, 5, 6]}]}, "unique"),
])
def test_invalid_configs(data, match):
    with pytest.raises(ConfigError, match=match):
        config_from_dict(data)


def test_bad_toml(tmp_path):
    p = tmp_path / "x.toml"
    p.write_text("trials = [")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.toml")


def test_overrides_and_round_trip():
    cfg = config_from_dict({"seed": 9, "errors": {"multipath_std": 0.2}, "constellation": {"count": 6}})
    assert cfg.seed == 9 and cfg.errors.multipath_std == 0.2 and cfg.constellation.count == 6
    assert cfg.errors.meas_noise_std == ScenarioConfig().errors.meas_noise_std
    d = config_as_dict(cfg)
    assert d["constellation"]["count"] == 6


def test_receiver_lookup():
    cfg = ScenarioConfig()
    assert cfg.receiver("indoor").mode == "E"
    with pytest.raises(ConfigError):
        cfg.receiver("nowhere")


@pytest.mark.parametrize("variable, value, get", [
    ("sat_count", 8, lambda c: c.constellation.count),
    ("timing_ns", 4.0, lambda c: c.timesync.max_delay_variation * 1e9),
    ("elements_per_row", 120, lambda c: c.astars.elements_per_row),
    ("wavelength", 0.2548, lambda c: c.astars.wavelength),
])
def test_apply_sweep_value(variable, value, get):
    assert get(apply_sweep_value(ScenarioConfig(), variable, value)) == pytest.approx(value)


def test_sweep_spec_validation():
    with pytest.raises(ConfigError):
        SweepSpec("colour", (1,))
    with pytest.raises(ConfigError):
        SweepSpec("sat_count", ())
    with pytest.raises(ConfigError):
        SweepSpec("sat_count", (5.5,))
    with pytest.raises(ConfigError):
        SweepSpec("sat_count", (3,))
    with pytest.raises(ConfigError):
        SweepSpec("sat_count", (5,), stage="both")
    assert SweepSpec("sat_count", (5,)).receiver_name == "urban"


def test_sweep_file_relative_base(tmp_path):
    (tmp_path / "b.toml").write_text("seed = 4\ntrials = 3\n")
    (tmp_path / "s.toml").write_text('base = "b.toml"\nvariable = "timing_ns"\nvalues = [1, 2]\n'
                                     '[scenario]\ntrials = 2\n')
    spec = load_sweep_spec(tmp_path / "s.toml")
    assert spec.base.seed == 4 and spec.base.trials == 2
    (tmp_path / "bad.toml").write_text('variable = "timing_ns"\nvalues = [1]\nextra = 1\n')
    with pytest.raises(ConfigError):
        load_sweep_spec(tmp_path / "bad.toml")


def test_frozen():
    with pytest.raises(dataclasses.FrozenInstanceError):
        ScenarioConfig().trials = 5
