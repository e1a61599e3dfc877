"""
Monte Carlo sweeps of the optimal received power.

Every random quantity is drawn from its own counter-based stream keyed by
``(seed, tag, N, index)``: the RIS-user channel per trial, the BS-RIS
channels, LoS angles and targets per block of ``block_len`` trials. Results
therefore do not depend on how trials are split across workers.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channels import (
    PathLossModel,
    RngStream,
    ScenarioChannels,
    draw_los_angles,
    los_vector,
    rayleigh_vector,
    rician_vector,
)
from .errors import InsufficientPoints, InvalidConfig, NonPositivePower
from .scaling import dmu_from_angles, expected_power_los, expected_power_rayleigh
from .solver import (
    RisArchitecture,
    TargetReflections,
    optimal_power_batch,
    random_targets,
    solve,
)

CHANNEL_KINDS = ("rayleigh", "los", "rician")
CHUNK_BLOCKS = 64
CSV_COLUMNS = (
    "N", "G", "Gs", "L", "channel", "trials", "seed",
    "mean_power_W", "stderr_W", "analytic_power_W",
)


@dataclass(frozen=True)
class Geometry:
    """Link distances in meters and the path-loss model."""

    d_bs1_m: float = 2.0
    d_bsl_m: float = 4.0
    d_user_m: float = 20.0
    path_loss: PathLossModel = field(default_factory=PathLossModel)

    def gains(self, L):
        """``(rho_RI, [rho_IT1, ..., rho_ITL])``."""
        pl = self.path_loss
        rho_it = [pl.bs_ris(self.d_bs1_m)] + [pl.bs_ris(self.d_bsl_m)] * (L - 1)
        return pl.ris_user(self.d_user_m), rho_it


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Full description of a reproducible sweep.

    ``architectures`` holds group sizes; ``"full"`` means ``Gs = N``.
    ``angles_rad`` fixes the LoS angles of all ``L`` BS-RIS links; when it is
    None they are redrawn for every block.
    """

    L: int = 2
    N_values: tuple = (16, 32, 64, 128)
    architectures: tuple = (1, 2, 4, "full")
    channel_kind: str = "rayleigh"
    rician_factor_dB: float = 2.0
    angles_rad: tuple = None
    trials: int = 200_000
    block_len: int = 20
    seed: int = 0
    geometry: Geometry = field(default_factory=Geometry)
    P_T_W: float = 10.0

    def validate(self):
        if not isinstance(self.L, int) or self.L < 2:
            raise InvalidConfig("L", "need an integer L >= 2")
        if len(self.N_values) == 0:
            raise InvalidConfig("N_values", "at least one N is required")
        if any(not isinstance(n, int) or n < 1 for n in self.N_values):
            raise InvalidConfig("N_values", "entries must be positive integers")
        if len(self.architectures) == 0:
            raise InvalidConfig("group_sizes", "at least one architecture is required")
        for gs in self.architectures:
            if gs == "full":
                continue
            if not isinstance(gs, int) or gs < 1:
                raise InvalidConfig("group_sizes", f"invalid group size {gs!r}")
            for n in self.N_values:
                if n % gs:
                    raise InvalidConfig("group_sizes", f"Gs={gs} does not divide N={n}")
        if self.channel_kind not in CHANNEL_KINDS:
            raise InvalidConfig("kind", f"expected one of {CHANNEL_KINDS}")
        if self.angles_rad is not None:
            if len(self.angles_rad) != self.L:
                raise InvalidConfig("angles_rad", f"need {self.L} angles")
            if any(not abs(a) < math.pi / 2 for a in self.angles_rad):
                raise InvalidConfig("angles_rad", "angles must lie in (-pi/2, pi/2)")
        if self.trials < 1:
            raise InvalidConfig("trials", "need trials >= 1")
        if self.block_len < 1:
            raise InvalidConfig("block_len", "need block_len >= 1")
        if not self.P_T_W > 0:
            raise InvalidConfig("P_T_W", "transmit power must be positive")
        g = self.geometry
        for name in ("d_bs1_m", "d_bsl_m", "d_user_m"):
            if not getattr(g, name) > 0:
                raise InvalidConfig(name, "distance must be positive")
        if not (g.path_loss.exponent_ru > 0 and g.path_loss.exponent_bi > 0):
            raise InvalidConfig("alpha", "path-loss exponents must be positive")
        return self

    def group_size(self, N, arch):
        return N if arch == "full" else int(arch)

    @property
    def n_blocks(self):
        return -(-self.trials // self.block_len)


@dataclass(frozen=True)
class SweepRow:
    N: int
    G: int
    Gs: int
    L: int
    channel: str
    trials: int
    seed: int
    mean_power: float
    stderr: float
    analytic_power: float = None


@dataclass
class SweepResult:
    rows: list

    def to_csv(self):
        lines = [",".join(CSV_COLUMNS)]
        for r in self.rows:
            analytic = "" if r.analytic_power is None else f"{r.analytic_power:.16e}"
            lines.append(
                f"{r.N},{r.G},{r.Gs},{r.L},{r.channel},{r.trials},{r.seed},"
                f"{r.mean_power:.16e},{r.stderr:.16e},{analytic}"
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_csv())

    def select(self, Gs=None, N=None):
        return [r for r in self.rows if (Gs is None or r.Gs == Gs) and (N is None or r.N == N)]


def _stream(config, *parts):
    return RngStream.for_key(config.seed, *parts).generator()


def draw_angles(config, N, block):
    if config.angles_rad is not None:
        return np.asarray(config.angles_rad, dtype=float)
    return draw_los_angles(config.L, _stream(config, "angles", N, block))


def draw_bs_channels(config, N, block):
    """BS-RIS channels of one block, ``shape (L, N)``; index 0 is the serving BS."""
    _, rho_it = config.geometry.gains(config.L)
    kind = config.channel_kind
    if kind == "rayleigh":
        rng = _stream(config, "h_IT", N, block)
        return np.stack([rayleigh_vector(N, rho, rng) for rho in rho_it])
    theta = draw_angles(config, N, block)
    if kind == "los":
        return np.stack([los_vector(N, t, rho) for t, rho in zip(theta, rho_it)])
    rng = _stream(config, "h_IT", N, block)
    return np.stack([
        rician_vector(N, t, rho, config.rician_factor_dB, rng) for t, rho in zip(theta, rho_it)
    ])


def draw_user_channel(config, N, trial_index):
    rho_ri, _ = config.geometry.gains(config.L)
    return rayleigh_vector(N, rho_ri, _stream(config, "h_RI", N, trial_index))


def draw_targets(config, N, Gs, block, h_IT):
    """Targets of one block for group size ``Gs``, ``shape (L-1, N)``."""
    arch = RisArchitecture.from_group_size(N, Gs)
    return np.stack(random_targets(h_IT[1:], arch, _stream(config, "targets", N, Gs, block)))


def run_trial(config, trial_index, N, arch):
    """
    Received power of one trial in Watts, via the full scalar solver.

    ``arch`` is a group size or ``"full"``.
    """
    Gs = config.group_size(N, arch)
    block = trial_index // config.block_len
    h_IT = draw_bs_channels(config, N, block)
    d = draw_targets(config, N, Gs, block, h_IT)
    channels = ScenarioChannels(draw_user_channel(config, N, trial_index), list(h_IT))
    sol = solve(channels, TargetReflections(list(d)), RisArchitecture.from_group_size(N, Gs))
    return config.P_T_W * sol.optimal_power


def _chunk_powers(config, N, group_sizes, blocks):
    """Per-trial powers for a range of blocks, one array per group size."""
    trials = [t for b in blocks for t in range(b * config.block_len, min((b + 1) * config.block_len, config.trials))]
    h_RI = np.stack([draw_user_channel(config, N, t) for t in trials])
    slow = {b: draw_bs_channels(config, N, b) for b in blocks}
    counts = [min((b + 1) * config.block_len, config.trials) - b * config.block_len for b in blocks]
    h_IT = np.concatenate([np.repeat(slow[b][None], c, axis=0) for b, c in zip(blocks, counts)])
    out = []
    for Gs in group_sizes:
        d_blk = [draw_targets(config, N, Gs, b, slow[b]) for b in blocks]
        d = np.concatenate([np.repeat(x[None], c, axis=0) for x, c in zip(d_blk, counts)])
        out.append(config.P_T_W * optimal_power_batch(h_RI, h_IT, d, Gs))
    return out


def worker_count():
    env = os.environ.get("RIS_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise InvalidConfig("RIS_THREADS", f"not an integer: {env!r}") from None
        if n < 1:
            raise InvalidConfig("RIS_THREADS", "must be >= 1")
        return n
    return os.cpu_count() or 1


def block_stderr(powers, block_len):
    """
    Standard error of the mean that treats each block as one cluster.

    Trials in a block share the BS-RIS channels, so they are not independent.
    With ``block_len = 1`` this is the usual ``s / sqrt(T)``.
    """
    T = powers.size
    K = -(-T // block_len)
    if K < 2:
        return 0.0
    mean = powers.mean()
    pad = np.zeros(K * block_len)
    pad[:T] = powers - mean
    S = pad.reshape(K, block_len).sum(axis=1)
    return float(math.sqrt((S @ S) / T ** 2 * K / (K - 1)))


def analytic_power(config, N, Gs):
    """Closed-form mean in Watts when one exists for this cell, else None."""
    rho_ri, rho_it = config.geometry.gains(config.L)
    scale = config.P_T_W
    if config.channel_kind == "rayleigh":
        return scale * expected_power_rayleigh(N, Gs, config.L, rho_ri, rho_it[0])
    if config.channel_kind == "los" and config.L == 2 and config.angles_rad is not None:
        dmu = dmu_from_angles(*config.angles_rad)
        return scale * expected_power_los(N, Gs, dmu, 2, rho_ri, rho_it[0])
    return None


def simulate_powers(config, N, group_sizes, workers=None):
    """Per-trial powers (Watts) for every group size at one N; independent of ``workers``."""
    workers = worker_count() if workers is None else workers
    chunks = [
        list(range(s, min(s + CHUNK_BLOCKS, config.n_blocks)))
        for s in range(0, config.n_blocks, CHUNK_BLOCKS)
    ]

    def job(blocks):
        return _chunk_powers(config, N, group_sizes, blocks)

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, chunks))
    else:
        parts = [job(c) for c in chunks]
    return [np.concatenate([p[i] for p in parts]) for i in range(len(group_sizes))]


def run_sweep(config, workers=None):
    """Mean, standard error and analytic value for every (N, architecture) cell."""
    config.validate()
    rows = []
    for N in config.N_values:
        sizes = [config.group_size(N, a) for a in config.architectures]
        powers = simulate_powers(config, N, sizes, workers)
        for Gs, p in zip(sizes, powers):
            rows.append(SweepRow(
                N=N,
                G=N // Gs,
                Gs=Gs,
                L=config.L,
                channel=config.channel_kind,
                trials=config.trials,
                seed=config.seed,
                mean_power=float(np.sum(p) / p.size),
                stderr=block_stderr(p, config.block_len),
                analytic_power=analytic_power(config, N, Gs),
            ))
    return SweepResult(rows)


def fit_scaling_exponent(N_values, powers):
    """Least-squares slope of ``log(power)`` against ``log(N)``."""
    N_values = np.asarray(N_values, dtype=float)
    powers = np.asarray(powers, dtype=float)
    if N_values.shape != powers.shape:
        raise ValueError("N_values and powers differ in length")
    if np.unique(N_values).size < 3:
        raise InsufficientPoints("need at least three distinct N values")
    if np.any(powers <= 0) or np.any(N_values <= 0):
        raise NonPositivePower("all N and powers must be positive")
    slope, _ = np.polyfit(np.log(N_values), np.log(powers), 1)
    return float(slope)


def with_overrides(config, **kwargs):
    return replace(config, **kwargs)
