import math

import pytest

from vatsim.config import RunConfig, dump_config, load_config, parse_config
from vatsim.constants import AMU, ANGSTROM
from vatsim.errors import ConfigurationError


def test_empty_file_gives_defaults(tmp_path):
    path = tmp_path / "empty.cfg"
    path.write_text("")
    cfg = load_config(path)
    assert cfg == RunConfig()
    spec = cfg.lattice()
    assert (spec.N, spec.L) == (70, 70)
    assert spec.m == pytest.approx(18 * AMU) and spec.a_lat == pytest.approx(3 * ANGSTROM)
    assert spec.temperature == 310.0 and spec.omega_D == 1.6e13 and spec.c_S == 1500.0
    assert cfg.barrier().kappa * ANGSTROM == pytest.approx(14.18, abs=0.01)


def test_none_path_is_defaults():
    assert load_config(None) == RunConfig()


def test_negative_temperature():
    with pytest.raises(ConfigurationError) as err:
        parse_config("temperature = -1\n")
    assert "temperature out of range" in str(err.value)
    assert err.value.line == 1


def test_round_trip_mass(tmp_path):
    cfg = parse_config("mass_amu = 18\n")
    assert cfg.mass_amu == 18.0
    path = tmp_path / "rt.cfg"
    path.write_text(dump_config(cfg))
    assert load_config(path) == cfg
    assert load_config(path).lattice().m == cfg.lattice().m


def test_round_trip_all_fields(tmp_path):
    cfg = parse_config("sound_speed = 1234.5678901234567\nobservers = 2, 8\nmargin_ratios = 0.25, 3\n"
                       "correlation = debye\n")
    assert parse_config(dump_config(cfg)) == cfg
    assert cfg.observers == (2, 8) and cfg.margin_ratios == (0.25, 3.0)


def test_comments_and_blank_lines():
    cfg = parse_config("# header\n\ntrials = 7   # few\n")
    assert cfg.trials == 7


@pytest.mark.parametrize("text, line", [
    ("trials = 3\nbogus_key = 1\n", 2),
    ("trials = 3\ntrials = 4\n", 2),
    ("\n\nno equals sign\n", 3),
    ("lattice_n = 7.5\n", 1),
    ("temperature = warm\n", 1),
    ("temperature =\n", 1),
])
def test_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigurationError) as err:
        parse_config(text)
    assert err.value.line == line
    assert str(err.value).startswith(f"line {line}:")


@pytest.mark.parametrize("key, value", [
    ("lattice_n", "1"), ("mass_amu", "0"), ("duration_ns", "-1"), ("samples_per_cycle", "1"),
    ("margin_angstrom", "0"), ("correlation", "sometimes"), ("threshold_scaling", "cubic"),
    ("prefactor", "maybe"), ("experiment", "nope"), ("omega_debye", "nan"), ("observers", "0"),
])
def test_range_checks(key, value):
    with pytest.raises(ConfigurationError):
        parse_config(f"{key} = {value}\n")


def test_overrides_win():
    cfg = parse_config("master_seed = 5\n", {"master_seed": 9})
    assert cfg.master_seed == 9


def test_derived_quantities():
    cfg = RunConfig(duration_ns=0.5, samples_per_cycle=8)
    assert cfg.duration == pytest.approx(5e-10)
    assert cfg.dt == pytest.approx(2 * math.pi / 1.6e13 / 8)
    assert cfg.margin == pytest.approx(ANGSTROM)
