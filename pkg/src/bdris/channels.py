"""
Channel realizations: Rayleigh, LoS uniform-linear-array and Rician vectors,
large-scale path loss, and deterministic per-stream random generators.
"""

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AngleOutOfRange, DimensionMismatch, NonPositiveDistance

MASK64 = (1 << 64) - 1


def stream_id(*parts):
    """Stable 64-bit identifier of a tuple of tags/indices (independent of PYTHONHASHSEED)."""
    text = "\x1f".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "little")


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream: identical (seed, stream_id) gives identical samples."""

    seed: int
    stream_id: int

    @classmethod
    def for_key(cls, seed, *parts):
        return cls(seed & MASK64, stream_id(*parts))

    def generator(self):
        key = np.array([self.seed & MASK64, self.stream_id & MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class PathLossModel:
    """``L(d) = L0 * d**(-alpha)`` with separate exponents for RIS-user and BS-RIS links."""

    L0_dB: float = -30.0
    exponent_ru: float = 2.8
    exponent_bi: float = 2.0

    def __post_init__(self):
        if not (self.exponent_ru > 0 and self.exponent_bi > 0):
            raise ValueError("path-loss exponents must be positive")

    def ris_user(self, distance):
        return path_gain(distance, self.exponent_ru, self.L0_dB)

    def bs_ris(self, distance):
        return path_gain(distance, self.exponent_bi, self.L0_dB)


def path_gain(distance, exponent, L0_dB=-30.0):
    """Linear power gain ``10**(L0_dB/10) * distance**(-exponent)``."""
    if not distance > 0:
        raise NonPositiveDistance(f"distance must be positive, got {distance}")
    return 10.0 ** (L0_dB / 10.0) * distance ** (-exponent)


def rayleigh_vector(n, rho, rng):
    """i.i.d. CN(0, rho) entries."""
    if rho < 0:
        raise ValueError("rho must be non-negative")
    re = rng.standard_normal(n)
    im = rng.standard_normal(n)
    return math.sqrt(rho / 2.0) * (re + 1j * im)


def steering_vector(n, theta):
    """Half-wavelength ULA response ``[1, e^{-i pi sin(theta)}, ..., e^{-i (n-1) pi sin(theta)}]``."""
    if not (-math.pi / 2 < theta < math.pi / 2):
        raise AngleOutOfRange(f"theta={theta} outside (-pi/2, pi/2)")
    return np.exp(-1j * math.pi * math.sin(theta) * np.arange(n))


def los_vector(n, theta, rho):
    if rho < 0:
        raise ValueError("rho must be non-negative")
    return math.sqrt(rho) * steering_vector(n, theta)


def rician_vector(n, theta, rho, kappa_dB, rng):
    """
    Power-preserving Rician mix of a LoS component and Rayleigh scattering.

    ``kappa_dB >= 200`` is treated as pure LoS and ``<= -200`` as pure Rayleigh.
    """
    if kappa_dB >= 200:
        return los_vector(n, theta, rho)
    if kappa_dB <= -200:
        return rayleigh_vector(n, rho, rng)
    k = 10.0 ** (kappa_dB / 10.0)
    los = math.sqrt(rho * k / (1.0 + k)) * steering_vector(n, theta)
    return los + math.sqrt(rho / (1.0 + k)) * rayleigh_vector(n, 1.0, rng)


def draw_los_angles(count, rng, limit=1.4, min_sin_gap=0.05):
    """Uniform angles on (-limit, limit), redrawn until all sines differ by min_sin_gap."""
    while True:
        theta = rng.uniform(-limit, limit, size=count)
        s = np.sin(theta)
        gaps = np.abs(s[:, None] - s[None, :])[np.triu_indices(count, 1)]
        if gaps.size == 0 or gaps.min() >= min_sin_gap:
            return theta


@dataclass
class ScenarioChannels:
    """
    One realization of every link.

    ``h_IT[0]`` is the serving BS-RIS channel; ``h_IT[1:]`` belong to the
    non-serving operators. ``h_RT`` is the optional direct BS-user path.
    """

    h_RI: np.ndarray
    h_IT: list
    gains: dict = field(default_factory=dict)
    h_RT: complex = 0j

    def __post_init__(self):
        self.h_RI = np.asarray(self.h_RI, dtype=complex).ravel()
        self.h_IT = [np.asarray(h, dtype=complex).ravel() for h in self.h_IT]
        if len(self.h_IT) < 2:
            raise DimensionMismatch("need at least two operators (L >= 2)")
        n = self.h_RI.size
        for h in self.h_IT:
            if h.size != n:
                raise DimensionMismatch(f"channel length {h.size} != N={n}")

    @property
    def N(self):
        return self.h_RI.size

    @property
    def L(self):
        return len(self.h_IT)
