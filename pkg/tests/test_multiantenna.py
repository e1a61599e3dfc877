import numpy as np
import pytest

from bdris.errors import (
    GroupSizeTooSmall,
    Infeasible,
    NotUnitaryInput,
    RankDeficient,
    ZeroConstraint,
)
from bdris.linalg import block_diag, haar_unitary
from bdris.multiantenna import (
    MultiAntennaScenario,
    build_reduced_problem,
    compute_tau,
    grid_search_phases,
    matrix_rank,
    rank_reduce_constraints,
    reconstruct_theta,
    solve_reduced_single_stream,
    unique_solution_small_group,
)
from bdris.solver import RisArchitecture, solve, solve_multi_operator

from conftest import crandn, random_instance


def make_scenario(rng, N_T, N_R, L, Gs, G, identity=False):
    N = G * Gs
    arch = RisArchitecture(N, G, Gs)
    H_IT = [crandn(rng, N, N_T) for _ in range(L)]
    V = [np.eye(Gs)] * G if identity else list(haar_unitary(Gs, rng, size=G))
    Vb = block_diag(V)
    D_IT = [Vb @ H for H in H_IT[1:]]
    return MultiAntennaScenario(crandn(rng, N_R, N), H_IT, D_IT, arch)


def rel_fro(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def test_tau_full_rank(rng):
    assert compute_tau(make_scenario(rng, 4, 2, 2, 6, 2)) == 5
    for L in (2, 3, 4):
        assert compute_tau(make_scenario(rng, 1, 1, L, L, 2)) == L


def test_tau_rank_deficient(rng):
    N, Gs = 8, 8
    arch = RisArchitecture(N, 1, Gs)
    a, b = crandn(rng, N), crandn(rng, N)
    H2 = np.stack([a, b, a, b], axis=1)  # rank 2 instead of 4
    sc = MultiAntennaScenario(crandn(rng, 1, N), [crandn(rng, N, 4), H2], [H2.copy()], arch)
    s = np.linalg.svd(H2, compute_uv=False)
    assert int(np.sum(s > 1e-10 * s[0])) == 2
    assert compute_tau(sc) == 3


def test_rank_reduce_examples(rng):
    H = crandn(rng, 6, 3)
    D = crandn(rng, 6, 3)
    A, R = rank_reduce_constraints(H, D)
    assert A is H and R is D
    h = crandn(rng, 5)
    A, R = rank_reduce_constraints(np.stack([h, h], 1), np.stack([h, h], 1))
    assert A.shape == (5, 1)
    # A spans h
    assert matrix_rank(np.hstack([A, h[:, None]])) == 1
    with pytest.raises(ZeroConstraint):
        rank_reduce_constraints(np.zeros((4, 2)), np.zeros((4, 2)))


def test_rank_reduce_implies_original(rng):
    Gs = 4
    H = crandn(rng, Gs, 2) @ crandn(rng, 2, 6)  # rank 2, 4x6
    Q = haar_unitary(Gs, rng)
    D = Q @ H
    A, R = rank_reduce_constraints(H, D)
    assert A.shape == (Gs, 2)
    from bdris.linalg import unitary_completion_matrix
    Ur, Ua = unitary_completion_matrix(R), unitary_completion_matrix(A)
    for _ in range(100):
        mid = np.eye(Gs, dtype=complex)
        mid[2:, 2:] = haar_unitary(Gs - 2, rng)
        T = Ur @ mid @ Ua.conj().T
        assert np.linalg.norm(T @ A - R) <= 1e-9 * np.linalg.norm(R)
        assert np.linalg.norm(T @ H - D) <= 1e-8 * np.linalg.norm(D)


def test_reduction_soundness(rng):
    """Reconstructed Theta is feasible and reproduces Hbar0 + Hbar1 Theta_bar Hbar2."""
    count = 0
    for N_T in (1, 2, 4):
        for L in (2, 3):
            tau = N_T * (L - 1) + 1
            for Gs in (tau, tau + 1, 2 * tau):
                for _ in range(17):
                    sc = make_scenario(rng, N_T, 2, L, Gs, 2)
                    red = build_reduced_problem(sc)
                    assert red.tau == tau and red.block_size == Gs - tau + 1
                    assert red.Hbar1.shape == (2, 2 * (Gs - tau + 1))
                    assert red.Hbar2.shape == (2 * (Gs - tau + 1), N_T)
                    bars = list(haar_unitary(red.block_size, rng, size=2))
                    Theta = reconstruct_theta(red, bars)
                    assert sc.constraint_residuals(Theta).max() <= 1e-9
                    assert rel_fro(sc.effective_channel(Theta), red.effective_channel(bars)) <= 1e-9
                    count += 1
    assert count >= 306


def test_identity_blocks_give_identity(rng):
    sc = make_scenario(rng, 2, 1, 2, 5, 2, identity=True)
    red = build_reduced_problem(sc)
    Theta = reconstruct_theta(red, [np.eye(red.block_size)] * 2)
    assert np.max(np.abs(Theta - np.eye(10))) <= 1e-12


def test_gs_equal_tau_gives_phases(rng):
    sc = make_scenario(rng, 2, 1, 2, 3, 3)
    red = build_reduced_problem(sc)
    assert red.block_size == 1
    assert red.Hbar1.shape[1] == 3 and red.Hbar2.shape[0] == 3


def test_errors(rng):
    sc = make_scenario(rng, 2, 1, 3, 4, 2)
    with pytest.raises(GroupSizeTooSmall):
        build_reduced_problem(sc)
    sc = make_scenario(rng, 1, 1, 2, 4, 2)
    red = build_reduced_problem(sc)
    with pytest.raises(NotUnitaryInput):
        reconstruct_theta(red, [2 * np.eye(3)] * 2)
    bad = MultiAntennaScenario(sc.H_RI, sc.H_IT, [2 * sc.D_IT[0]], sc.arch)
    with pytest.raises(Infeasible):
        build_reduced_problem(bad)


def test_single_antenna_pipeline_matches_solver(rng):
    for Gs, L in [(2, 2), (4, 2), (8, 2), (4, 3), (8, 4), (3, 3)]:
        ch, tg, arch = random_instance(rng, 2 * Gs if Gs < 8 else 8, Gs, L)
        sc = MultiAntennaScenario.from_single_antenna(ch, tg, arch)
        red = build_reduced_problem(sc)
        bars, power = solve_reduced_single_stream(red)
        Theta = reconstruct_theta(red, bars)
        sol = solve_multi_operator(ch, tg, arch)
        assert abs(power - sol.optimal_power) <= 1e-12 * sol.optimal_power
        assert np.max(np.abs(Theta - sol.Theta)) <= 1e-12


def test_grid_oracle_at_gs_equal_tau(rng):
    ch, tg, arch = random_instance(rng, 6, 3, 3)  # tau = 3, two 1x1 free phases
    red = build_reduced_problem(MultiAntennaScenario.from_single_antenna(ch, tg, arch))
    _, grid = grid_search_phases(red, n_grid=720)
    _, best = solve_reduced_single_stream(red)
    assert grid <= best * (1 + 1e-12)
    assert abs(grid - best) <= 1e-4 * best
    assert abs(best - solve(ch, tg, arch).optimal_power) <= 1e-12 * best


def test_unique_solution_small_group(rng):
    sc = make_scenario(rng, 2, 1, 3, 4, 2, identity=True)
    assert np.max(np.abs(unique_solution_small_group(sc) - np.eye(8))) <= 1e-12
    sc = make_scenario(rng, 2, 1, 3, 4, 2)
    T = unique_solution_small_group(sc)
    assert np.max(np.abs(T.conj().T @ T - np.eye(8))) <= 1e-9
    assert sc.constraint_residuals(T).max() <= 1e-9
    ch, tg, arch = random_instance(rng, 8, 2, 3)
    T = unique_solution_small_group(MultiAntennaScenario.from_single_antenna(ch, tg, arch))
    assert np.max(np.abs(T - solve(ch, tg, arch).Theta)) <= 1e-12


def test_unique_solution_errors(rng):
    sc = make_scenario(rng, 2, 1, 3, 4, 2)
    bad = MultiAntennaScenario(sc.H_RI, sc.H_IT, [sc.D_IT[0], 1.3 * sc.D_IT[1]], sc.arch)
    with pytest.raises(Infeasible):
        unique_solution_small_group(bad)
    h = crandn(rng, 4, 1)
    H = np.hstack([h, h, h, h])
    arch = RisArchitecture(4, 1, 4)
    rd = MultiAntennaScenario(crandn(rng, 1, 4), [crandn(rng, 4, 2), H[:, :2], H[:, 2:]],
                              [H[:, :2], H[:, 2:]], arch)
    with pytest.raises(RankDeficient):
        unique_solution_small_group(rd)
