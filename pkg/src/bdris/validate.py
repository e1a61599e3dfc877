"""
Self-check suites run by ``bdris validate``.

Each check yields a :class:`Check` whose status is PASS, FAIL or
INCONCLUSIVE (statistical cells with too few trials to mean anything).
"""

import math
from dataclasses import dataclass

import numpy as np

from .channels import ScenarioChannels, rayleigh_vector
from .harness import ExperimentConfig, fit_scaling_exponent, run_sweep
from .linalg import unitary_completion_vector
from .scaling import analytic_curve
from .solver import (
    RisArchitecture,
    TargetReflections,
    generate_targets,
    random_feasible_theta,
    solve,
    two_operator_optimal_power,
)

MIN_STATS_TRIALS = 10_000
SLOPE_N = (32, 64, 128, 256)


@dataclass
class Check:
    name: str
    status: str
    detail: str = ""

    def line(self):
        return f"{self.status:<12} {self.name}  {self.detail}".rstrip()


def phase_grid_check(rng, n_grid=100_000):
    """Two-element fully connected RIS: the free part is one phase, so a dense grid is exact."""
    h_RI, h1, h2 = (rayleigh_vector(2, 1.0, rng) for _ in range(3))
    arch = RisArchitecture(2, 1, 2)
    channels = ScenarioChannels(h_RI, [h1, h2])
    targets = generate_targets(channels, arch, rng)
    closed = two_operator_optimal_power(channels, targets, arch)
    Ud = unitary_completion_vector(targets.d[0])
    Uh = unitary_completion_vector(h2)
    w = Ud.conj().T @ h_RI
    v = Uh.conj().T @ h1
    phi = np.exp(2j * np.pi * np.arange(n_grid) / n_grid)
    grid = np.abs(np.conj(w[0]) * v[0] + phi * np.conj(w[1]) * v[1]) ** 2
    return float(grid.max()), closed


def dominance_check(rng, G, Gs, L, samples=10_000):
    """Largest objective over Haar-sampled feasible points relative to the closed form."""
    N = G * Gs
    arch = RisArchitecture(N, G, Gs)
    channels = ScenarioChannels(rayleigh_vector(N, 1.0, rng), [rayleigh_vector(N, 1.0, rng) for _ in range(L)])
    targets = generate_targets(channels, arch, rng)
    sol = solve(channels, targets, arch)
    best = 0.0
    for start in range(0, samples, 2000):
        thetas = random_feasible_theta(channels, targets, arch, rng, size=min(2000, samples - start))
        if thetas.ndim == 2:
            thetas = thetas[None]
        vals = np.abs(np.einsum("i,tij,j->t", channels.h_RI.conj(), thetas, channels.h_IT[0])) ** 2
        best = max(best, float(vals.max()))
    return best, sol.optimal_power


def oracle_suite(seed=0, samples=10_000):
    rng = np.random.default_rng(seed)
    out = []
    grid, closed = phase_grid_check(rng)
    rel = abs(grid - closed) / closed
    out.append(Check("phase-grid N=2 G=1 L=2", "PASS" if rel <= 1e-6 and grid <= closed * (1 + 1e-9) else "FAIL",
                     f"rel_gap={rel:.3e}"))
    for G, Gs in ((1, 8), (4, 2), (2, 4)):
        for L in (2, 3, 4):
            best, closed = dominance_check(rng, G, Gs, L, samples)
            excess = (best - closed) / closed
            status = "PASS" if excess <= 1e-9 else "FAIL"
            out.append(Check(f"dominance G={G} Gs={Gs} L={L}", status, f"max_sample/closed-1={excess:.3e}"))
    return out


def stats_configs(trials, seed):
    base = dict(N_values=(16,), trials=trials, seed=seed)
    yield ExperimentConfig(L=2, architectures=(1, 2, 4, "full"), **base)
    yield ExperimentConfig(L=4, architectures=(1, 2, 4, 8, "full"), **base)
    for dmu in (0.5, 1.5):
        angles = (0.0, math.asin(dmu / math.pi))
        yield ExperimentConfig(L=2, architectures=(1, 2, 4, "full"), channel_kind="los",
                               angles_rad=angles, **base)


def stats_suite(seed=0, trials=200_000, workers=None):
    out = []
    for cfg in stats_configs(trials, seed):
        for row in run_sweep(cfg, workers).rows:
            name = f"{cfg.channel_kind} L={row.L} N={row.N} Gs={row.Gs}"
            if cfg.angles_rad is not None:
                name += f" angles={cfg.angles_rad[0]:.4f},{cfg.angles_rad[1]:.4f}"
            z = abs(row.mean_power - row.analytic_power) / row.stderr if row.stderr > 0 else math.inf
            detail = f"mean={row.mean_power:.6e} analytic={row.analytic_power:.6e} z={z:.2f}"
            if trials < MIN_STATS_TRIALS:
                status = "INCONCLUSIVE"
            else:
                status = "PASS" if z <= 3.0 else "FAIL"
            out.append(Check(name, status, detail))
    decided = [c for c in out if c.status != "INCONCLUSIVE"]
    if decided:
        frac = sum(c.status == "PASS" for c in decided) / len(decided)
        out.append(Check("aggregate 3-sigma agreement >= 95% of cells",
                         "PASS" if frac >= 0.95 else "FAIL", f"fraction={frac:.3f}"))
    return out


def scaling_suite():
    """Slopes of the analytic curves over N in {32, 64, 128, 256}."""
    out = []
    for L in (2, 4):
        for Gs in (1, 2, 4, 8, "full"):
            curve = analytic_curve(SLOPE_N, Gs, L)
            slope = fit_scaling_exponent(SLOPE_N, curve)
            quadratic = Gs == "full" or Gs >= L
            if quadratic:
                ok = 1.90 <= slope <= 2.00
                band = "[1.90, 2.00]"
            else:
                ok = abs(slope - 1.0) <= 1e-9
                band = "1 +/- 1e-9"
            out.append(Check(f"slope L={L} Gs={Gs}", "PASS" if ok else "FAIL",
                             f"slope={slope:.6f} expected {band}"))
    return out
