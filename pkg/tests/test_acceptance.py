"""
End-to-end acceptance checks.

Every test appends one ``PASS``/``FAIL`` line to the terminal summary, with
the measured quantity, the tolerance and the wall time against its budget.
"""

import math
import time

import numpy as np
import pytest

from bdris.channels import ScenarioChannels, rayleigh_vector
from bdris.harness import ExperimentConfig, fit_scaling_exponent, run_sweep
from bdris.linalg import haar_unitary
from bdris.multiantenna import (
    MultiAntennaScenario,
    build_reduced_problem,
    reconstruct_theta,
    solve_reduced_single_stream,
)
from bdris.scaling import (
    analytic_curve,
    asymptotic_kappa,
    expected_power_rayleigh,
    single_operator_ratio,
)
from bdris.solver import (
    RisArchitecture,
    block_unitarity_error,
    generate_targets,
    received_power,
    solve,
    solve_multi_operator,
)
from bdris.validate import oracle_suite

from conftest import ACCEPTANCE_LINES, crandn, random_instance


def report(number, ok, detail, elapsed, budget):
    in_time = elapsed < budget
    status = "PASS" if ok and in_time else "FAIL"
    ACCEPTANCE_LINES.append(
        f"criterion {number:>2} {status}  {detail}  [{elapsed:.1f} s / budget {budget:g} s]"
    )
    return ok and in_time


def random_instances(count, seed):
    """Random single-antenna instances with L in {2,3,4}, Gs in {1,2,4,8}, N <= 64."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        L = int(rng.choice((2, 3, 4)))
        Gs = int(rng.choice((1, 2, 4, 8)))
        N = Gs * int(rng.integers(1, 64 // Gs + 1))
        yield random_instance(rng, N, Gs, L)


def three_sigma(rows):
    z = [abs(r.mean_power - r.analytic_power) / r.stderr for r in rows]
    return all(v <= 3.0 for v in z), z


def test_c01_closed_form_matches_direct_evaluation():
    t0 = time.perf_counter()
    worst = 0.0
    for channels, targets, arch in random_instances(1000, 1):
        sol = solve(channels, targets, arch)
        direct = received_power(sol.Theta, channels.h_RI, channels.h_IT[0])
        worst = max(worst, abs(direct - sol.optimal_power) / sol.optimal_power)
    ok = worst <= 1e-9
    assert report(1, ok, f"max rel gap {worst:.2e} (tol 1e-9, 1000 instances)",
                  time.perf_counter() - t0, 10)


def test_c02_constraints_and_unitarity():
    t0 = time.perf_counter()
    worst_c, worst_u = 0.0, 0.0
    for channels, targets, arch in random_instances(1000, 2):
        sol = solve(channels, targets, arch)
        for h, d in zip(channels.h_IT[1:], targets.d):
            worst_c = max(worst_c, np.linalg.norm(sol.Theta @ h - d) / np.linalg.norm(d))
        worst_u = max(worst_u, block_unitarity_error(sol.Theta, arch))
    ok = worst_c <= 1e-9 and worst_u <= 1e-10
    assert report(2, ok, f"constraint {worst_c:.2e} (tol 1e-9), unitarity {worst_u:.2e} (tol 1e-10)",
                  time.perf_counter() - t0, 10)


def test_c03_optimality_oracles():
    t0 = time.perf_counter()
    checks = oracle_suite(seed=3, samples=10_000)
    failed = [c.name for c in checks if c.status != "PASS"]
    detail = f"{len(checks) - len(failed)}/{len(checks)} oracle checks pass"
    if failed:
        detail += f"; failing: {', '.join(failed)}"
    assert report(3, not failed, detail, time.perf_counter() - t0, 60)


def test_c04_rayleigh_two_operators():
    t0 = time.perf_counter()
    cfg = ExperimentConfig(L=2, N_values=(16,), architectures=(1, 2, 4, 16), trials=200_000, seed=4)
    rows = run_sweep(cfg).rows
    ok3, z = three_sigma(rows)
    rel = [abs(r.mean_power / r.analytic_power - 1) for r in rows]
    ok = ok3 and max(rel) <= 0.015
    assert report(4, ok, f"max z {max(z):.2f} (tol 3), max rel dev {max(rel):.3%} (tol 1.5%)",
                  time.perf_counter() - t0, 300)


def test_c05_los_two_operators():
    t0 = time.perf_counter()
    zs = []
    for dmu in (0.5, 1.5):
        angles = (0.0, math.asin(dmu / math.pi))
        cfg = ExperimentConfig(L=2, N_values=(16,), architectures=(1, 2, 4, 16), channel_kind="los",
                               angles_rad=angles, trials=200_000, seed=5)
        zs += three_sigma(run_sweep(cfg).rows)[1]
    ok = max(zs) <= 3.0
    assert report(5, ok, f"max z {max(zs):.2f} over 8 cells (tol 3)", time.perf_counter() - t0, 300)


def test_c06_rayleigh_four_operators():
    t0 = time.perf_counter()
    cfg = ExperimentConfig(L=4, N_values=(16,), architectures=(1, 2, 4, 8, 16), trials=200_000, seed=6)
    rows = run_sweep(cfg).rows
    ok3, z = three_sigma(rows)
    rho_ri, rho_it = cfg.geometry.gains(4)
    linear = [r.analytic_power == pytest.approx(cfg.P_T_W * 16 * rho_ri * rho_it[0], rel=1e-14)
              for r in rows if r.Gs < 4]
    ok = ok3 and len(linear) == 2 and all(linear)
    assert report(6, ok, f"max z {max(z):.2f} (tol 3); Gs<L cells equal N*rho*rho: {all(linear)}",
                  time.perf_counter() - t0, 300)


def test_c07_scaling_transition():
    t0 = time.perf_counter()
    Ns = (32, 64, 128, 256)
    bad = []
    for L in (2, 4):
        for Gs in (1, 2, 4, 8, "full"):
            slope = fit_scaling_exponent(Ns, analytic_curve(Ns, Gs, L))
            quadratic = Gs == "full" or Gs >= L
            ok = 1.90 <= slope <= 2.00 if quadratic else abs(slope - 1.0) <= 1e-9
            if not ok:
                bad.append(f"L={L} Gs={Gs} slope={slope:.4f}")
    detail = "all slopes in band" if not bad else "out of band: " + "; ".join(bad)
    assert report(7, not bad, detail, time.perf_counter() - t0, 1)


def test_c08_headline_gain():
    t0 = time.perf_counter()
    cfg = ExperimentConfig(L=2, N_values=(128,), architectures=(1, 2), trials=100_000, seed=8)
    single, group = run_sweep(cfg).rows
    gain_dB = 10 * math.log10(group.mean_power / single.mean_power)
    ok = abs(gain_dB - 13.0) <= 1.5
    detail = (f"single {single.mean_power * 1e6:.3f} uW, Gs=2 {group.mean_power * 1e6:.3f} uW, "
              f"gain {gain_dB:.2f} dB (tol 13 +/- 1.5)")
    assert report(8, ok, detail, time.perf_counter() - t0, 600)


def test_c09_asymptotic_kappa():
    t0 = time.perf_counter()
    N = 4096
    notes, ok = [], True
    for L in (2, 3):
        for Gs in (2, 4, 8):
            if Gs < L:
                notes.append(f"L={L} Gs={Gs} linear regime, no kappa")
                continue
            rel = abs(expected_power_rayleigh(N, Gs, L) / N**2 / asymptotic_kappa(Gs, L) - 1)
            if rel > 0.05:
                ok = False
                notes.append(f"L={L} Gs={Gs} rel {rel:.3%} > 5%")
    ratio = single_operator_ratio(2, 2)
    if abs(ratio - 0.4096) > 1e-12:
        ok = False
        notes.append(f"ratio(Gs=2, L=2) = {ratio:.12f}, expected 0.4096")
    assert report(9, ok, "; ".join(notes) or "all cells within 5%", time.perf_counter() - t0, 1)


def test_c10_multiantenna_reduction():
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    worst_c, worst_h, draws, dims_ok = 0.0, 0.0, 0, True
    while draws < 1000:
        N_T = int(rng.choice((1, 2, 4)))
        L = int(rng.choice((2, 3)))
        tau = N_T * (L - 1) + 1
        Gs = tau + int(rng.integers(0, 4))
        G = int(rng.integers(1, 4))
        N, N_R = G * Gs, int(rng.integers(1, 4))
        arch = RisArchitecture(N, G, Gs)
        H_IT = [crandn(rng, N, N_T) for _ in range(L)]
        blocks = haar_unitary(Gs, rng, size=G)
        D_IT = [np.concatenate([blocks[g] @ H[g * Gs:(g + 1) * Gs] for g in range(G)]) for H in H_IT[1:]]
        sc = MultiAntennaScenario(crandn(rng, N_R, N), H_IT, D_IT, arch)
        red = build_reduced_problem(sc)
        dims_ok &= red.tau == tau and red.block_size == Gs - tau + 1
        bars = list(haar_unitary(red.block_size, rng, size=G))
        Theta = reconstruct_theta(red, bars)
        worst_c = max(worst_c, sc.constraint_residuals(Theta).max())
        eff = red.effective_channel(bars)
        worst_h = max(worst_h, np.linalg.norm(sc.effective_channel(Theta) - eff) / np.linalg.norm(eff))
        draws += 1
    worst_s = 0.0
    for _ in range(100):
        Gs = int(rng.choice((2, 3, 4, 8)))
        L = int(rng.choice((2, 3)))
        if Gs < L:
            continue
        channels, targets, arch = random_instance(rng, Gs * int(rng.integers(1, 5)), Gs, L)
        red = build_reduced_problem(MultiAntennaScenario.from_single_antenna(channels, targets, arch))
        bars, power = solve_reduced_single_stream(red)
        sol = solve_multi_operator(channels, targets, arch)
        worst_s = max(worst_s, abs(power - sol.optimal_power) / sol.optimal_power,
                      np.max(np.abs(reconstruct_theta(red, bars) - sol.Theta)))
    ok = worst_c <= 1e-9 and worst_h <= 1e-9 and dims_ok and worst_s <= 1e-12
    detail = (f"constraint {worst_c:.2e}, channel identity {worst_h:.2e} (tol 1e-9), "
              f"dims {'ok' if dims_ok else 'WRONG'}, N_T=1 vs solver {worst_s:.2e} (tol 1e-12)")
    assert report(10, ok, detail, time.perf_counter() - t0, 60)


def test_c11_worker_determinism():
    t0 = time.perf_counter()
    cfg = ExperimentConfig(L=3, N_values=(8, 16), architectures=(1, 2, 4, "full"), trials=4000, seed=11)
    csv = {w: run_sweep(cfg, workers=w).to_csv() for w in (1, 2, 8)}
    ok = csv[1] == csv[2] == csv[8]
    assert report(11, ok, "CSV bytes identical for 1, 2 and 8 workers" if ok else "CSV differs across workers",
                  time.perf_counter() - t0, 60)
