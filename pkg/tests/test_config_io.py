from pathlib import Path

import numpy as np
import pytest

from bdris.config import load_config, parse_config
from bdris.errors import DimensionMismatch, InvalidConfig
from bdris.harness import ExperimentConfig
from bdris.io import read_channels, read_theta, write_channels, write_theta
from bdris.solver import solve

from conftest import random_instance

DEFAULT_INI = Path(__file__).resolve().parents[1] / "configs" / "default.ini"


def test_default_file_matches_defaults():
    cfg, out = load_config(DEFAULT_INI)
    base = ExperimentConfig()
    assert cfg.L == 2 and cfg.P_T_W == 10.0 and cfg.block_len == 20 and cfg.seed == 0
    assert cfg.architectures == (1, 2, 4, "full")
    assert cfg.geometry == base.geometry
    assert cfg.rician_factor_dB == 2.0 and cfg.angles_rad is None
    assert out.csv == "sweep.csv" and out.svg == "sweep.svg"


def test_parse_values():
    cfg, _ = parse_config("""
[scenario]
L = 3
N_values = 8 16, 32
[architectures]
group_sizes = single, 4, full
[channels]
kind = LoS
angles_rad = 0.1, -0.2, 0.5
d_user_m = 30
[montecarlo]
trials = 77
seed = 12
""")
    assert cfg.L == 3 and cfg.N_values == (8, 16, 32)
    assert cfg.architectures == (1, 4, "full")
    assert cfg.channel_kind == "los" and cfg.angles_rad == (0.1, -0.2, 0.5)
    assert cfg.geometry.d_user_m == 30.0
    assert (cfg.trials, cfg.seed) == (77, 12)


@pytest.mark.parametrize("text,field", [
    ("[scenario]\nN_values =\n", "N_values"),
    ("[scenario]\ncolour = red\n", "colour"),
    ("[extras]\nx = 1\n", "extras"),
    ("[montecarlo]\ntrials = many\n", "trials"),
    ("[architectures]\ngroup_sizes = 3\n[scenario]\nN_values = 8\n", "group_sizes"),
    ("[channels]\nalpha_ru = -1\n", "alpha_ru"),
    ("[channels]\nd_bs1_m = 0\n", "d_bs1_m"),
    ("not an ini", "config"),
])
def test_parse_errors(text, field):
    with pytest.raises(InvalidConfig) as info:
        parse_config(text)
    assert info.value.field == field


def test_theta_roundtrip(tmp_path, rng):
    ch, tg, arch = random_instance(rng, 8, 4, 3)
    T = solve(ch, tg, arch).Theta
    p = tmp_path / "theta.txt"
    write_theta(p, T, arch.G, arch.Gs)
    T2, G, Gs = read_theta(p)
    assert (G, Gs) == (2, 4)
    assert np.max(np.abs(T2 - T)) == 0.0
    text = p.read_text()
    assert text.splitlines()[0] == "8 2 4" and "\r" not in text


def test_channels_roundtrip(tmp_path, rng):
    ch, tg, _ = random_instance(rng, 6, 3, 3)
    ch.h_RT = 0.25 - 1e-3j
    p = tmp_path / "ch.txt"
    write_channels(p, ch, tg)
    ch2, tg2 = read_channels(p)
    assert np.array_equal(ch2.h_RI, ch.h_RI)
    assert all(np.array_equal(a, b) for a, b in zip(ch2.h_IT, ch.h_IT))
    assert all(np.array_equal(a, b) for a, b in zip(tg2.d, tg.d))
    assert ch2.h_RT == ch.h_RT


def test_channels_missing_row(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("2 2\nh_RI 1 1\nh_IT1 1 1\nh_IT2 1 1\n")
    with pytest.raises(DimensionMismatch):
        read_channels(p)
