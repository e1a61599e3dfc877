"""
INI experiment configuration.

Sections and keys (units in brackets)::

    [scenario]      L, N_values, P_T_W [W]
    [architectures] group_sizes   (integers, "full", "single")
    [channels]      kind, rician_factor_dB [dB], angles_rad [rad], L0_dB [dB],
                    d_bs1_m, d_bsl_m, d_user_m [m], alpha_ru, alpha_bi
    [montecarlo]    trials, block_len, seed
    [output]        csv, svg

Lists are comma or whitespace separated. Missing keys take the defaults of
:class:`~bdris.harness.ExperimentConfig`; unknown sections or keys are errors.
"""

import configparser
import re
from dataclasses import dataclass

from .channels import PathLossModel
from .errors import InvalidConfig
from .harness import ExperimentConfig, Geometry

SCHEMA = {
    "scenario": ("L", "N_values", "P_T_W"),
    "architectures": ("group_sizes",),
    "channels": (
        "kind", "rician_factor_dB", "angles_rad", "L0_dB",
        "d_bs1_m", "d_bsl_m", "d_user_m", "alpha_ru", "alpha_bi",
    ),
    "montecarlo": ("trials", "block_len", "seed"),
    "output": ("csv", "svg"),
}


@dataclass
class OutputPaths:
    csv: str = None
    svg: str = None


def _split(text):
    return [t for t in re.split(r"[,\s]+", text.strip()) if t]


def _int(field, text):
    try:
        return int(text)
    except ValueError:
        raise InvalidConfig(field, f"expected an integer, got {text!r}") from None


def _float(field, text):
    try:
        return float(text)
    except ValueError:
        raise InvalidConfig(field, f"expected a number, got {text!r}") from None


def _group_size(text):
    t = text.lower()
    if t == "full":
        return "full"
    if t == "single":
        return 1
    return _int("group_sizes", text)


def parse_config(text):
    """Parse INI text into ``(ExperimentConfig, OutputPaths)``."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise InvalidConfig("config", str(exc).splitlines()[0]) from None
    for section in cp.sections():
        if section not in SCHEMA:
            raise InvalidConfig(section, "unknown section")
        for key in cp[section]:
            if key not in SCHEMA[section]:
                raise InvalidConfig(key, f"unknown key in [{section}]")

    def get(section, key):
        if cp.has_section(section) and key in cp[section]:
            return cp[section][key]
        return None

    base = ExperimentConfig()
    kw = {}
    if (v := get("scenario", "L")) is not None:
        kw["L"] = _int("L", v)
    if (v := get("scenario", "N_values")) is not None:
        kw["N_values"] = tuple(_int("N_values", t) for t in _split(v))
    if (v := get("scenario", "P_T_W")) is not None:
        kw["P_T_W"] = _float("P_T_W", v)
    if (v := get("architectures", "group_sizes")) is not None:
        kw["architectures"] = tuple(_group_size(t) for t in _split(v))
    if (v := get("channels", "kind")) is not None:
        kw["channel_kind"] = v.strip().lower()
    if (v := get("channels", "rician_factor_dB")) is not None:
        kw["rician_factor_dB"] = _float("rician_factor_dB", v)
    if (v := get("channels", "angles_rad")) is not None:
        parts = _split(v)
        if parts and parts[0].lower() not in ("random", "none"):
            kw["angles_rad"] = tuple(_float("angles_rad", t) for t in parts)
    g = base.geometry
    pl = g.path_loss
    geo = {
        "d_bs1_m": g.d_bs1_m, "d_bsl_m": g.d_bsl_m, "d_user_m": g.d_user_m,
        "L0_dB": pl.L0_dB, "alpha_ru": pl.exponent_ru, "alpha_bi": pl.exponent_bi,
    }
    for key in geo:
        if (v := get("channels", key)) is not None:
            geo[key] = _float(key, v)
    for key in ("alpha_ru", "alpha_bi"):
        if not geo[key] > 0:
            raise InvalidConfig(key, "path-loss exponent must be positive")
    kw["geometry"] = Geometry(
        geo["d_bs1_m"], geo["d_bsl_m"], geo["d_user_m"],
        PathLossModel(geo["L0_dB"], geo["alpha_ru"], geo["alpha_bi"]),
    )
    if (v := get("montecarlo", "trials")) is not None:
        kw["trials"] = _int("trials", v)
    if (v := get("montecarlo", "block_len")) is not None:
        kw["block_len"] = _int("block_len", v)
    if (v := get("montecarlo", "seed")) is not None:
        kw["seed"] = _int("seed", v)
    config = ExperimentConfig(**{**base.__dict__, **kw}).validate()
    out = OutputPaths(get("output", "csv"), get("output", "svg"))
    return config, out


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InvalidConfig("config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)
