import pytest

from multilayer_defense.config import (
    BUILTIN_SCENARIOS,
    DEFAULT_BATTERY,
    Calibration,
    battery_from_dict,
    load_battery,
)
from multilayer_defense.errors import ConfigError


def test_default_file_gives_the_four_scenario_battery():
    b = load_battery()
    assert tuple(s.name for s in b.scenarios) == DEFAULT_BATTERY
    assert b.runs == (100, 100, 100, 100)
    assert b.base_seed == 1
    assert all(s.calibration == Calibration() for s in b.scenarios)


def test_builtin_scenarios():
    assert set(BUILTIN_SCENARIOS) == {"baseline", "ew_only", "cyber_only", "deception_only", "multi_layer"}
    assert BUILTIN_SCENARIOS["baseline"].layers == frozenset()
    assert BUILTIN_SCENARIOS["multi_layer"].layers == {"ew", "cyber", "deception"}
    s = BUILTIN_SCENARIOS["baseline"]
    assert (s.dt, s.max_steps, s.hit_radius_m) == (0.1, 1200, 50.0)


def test_constants_override_reaches_every_scenario():
    b = battery_from_dict({"constants": {"decoy_radius_m": 900, "ew": {"noise_floor_dbm": -95}}})
    for s in b.scenarios:
        assert s.calibration.decoy_radius_m == 900.0
        assert s.calibration.ew.noise_floor_dbm == -95.0


def test_custom_scenario_and_run_counts():
    b = battery_from_dict(
        {
            "scenarios": {"coastal_ew": {"layers": ["ew"], "region": "khuzestan_coastal", "policy": "scripted-max"}},
            "battery": {"base_seed": 7, "runs": 3, "scenarios": ["baseline", {"name": "coastal_ew", "runs": 5}]},
        }
    )
    assert [s.name for s in b.scenarios] == ["baseline", "coastal_ew"]
    assert b.runs == (3, 5)
    assert b.scenarios[1].region == "khuzestan_coastal"


@pytest.mark.parametrize(
    "data,key",
    [
        ({"constants": {"no_such_knob": 1}}, "constants.no_such_knob"),
        ({"constants": {"fuel_steps": 1.5}}, "constants.fuel_steps"),
        ({"constants": {"clutter_radius_m": [1.0]}}, "constants.clutter_radius_m"),
        ({"scenarios": {"x": {"layers": ["ew", "lasers"]}}}, "scenarios.x.layers"),
        ({"scenarios": {"x": {"dt": 0}}}, "scenarios.x.dt"),
        ({"scenarios": {"x": {"hit_radius_m": -1}}}, "scenarios.x.hit_radius_m"),
        ({"scenarios": {"x": {"region": "atlantis"}}}, "scenarios.x.region"),
        ({"scenarios": {"x": {"policy": "trained"}}}, "scenarios.x.policy_path"),
        ({"battery": {"runs": 0}}, "battery.runs"),
        ({"battery": {"scenarios": ["nowhere"]}}, "battery.scenarios[0]"),
        ({"battery": {"scenarios": [{"name": "baseline", "runs": -2}]}}, "battery.scenarios[0].runs"),
        ({"extra": 1}, "extra"),
    ],
)
def test_bad_configuration_names_the_key(data, key):
    with pytest.raises(ConfigError) as exc:
        battery_from_dict(data)
    assert exc.value.key == key


def test_unreadable_and_invalid_files(tmp_path):
    with pytest.raises(ConfigError):
        load_battery(tmp_path / "missing.yaml")
    p = tmp_path / "bad.yaml"
    p.write_text("battery: [unclosed\n")
    with pytest.raises(ConfigError):
        load_battery(p)


def test_empty_file_means_defaults(tmp_path):
    p = tmp_path / "empty.yaml"
    p.write_text("")
    assert tuple(s.name for s in load_battery(p).scenarios) == DEFAULT_BATTERY
