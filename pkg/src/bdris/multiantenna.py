"""
Multi-antenna, multi-user generalisation.

With ``N_T`` antennas per BS the fixed-reflection constraints pin
``tau - 1 = N_T (L - 1)`` columns of every block (fewer when the stacked
channels are rank deficient). What remains is a block-unitary problem of
size ``Gs - tau + 1`` per group with effective channel
``Hbar0 + Hbar1 Theta_bar Hbar2``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    GroupSizeTooSmall,
    Infeasible,
    NotUnitaryInput,
    RankDeficient,
    ZeroConstraint,
)
from .linalg import RANK_TOL, block_diag, eps_zero, unitary_completion_matrix
from .solver import FEASIBILITY_TOL, RisArchitecture, aligned_inner_block, assemble_block

UNITARY_TOL = 1e-9


def _as_column_matrix(x):
    x = np.asarray(x, dtype=complex)
    return x[:, None] if x.ndim == 1 else x


@dataclass
class MultiAntennaScenario:
    """
    Channels of an ``L``-operator system with ``N_T``-antenna base stations.

    ``H_RI`` is ``N_R x N``; every ``H_IT[l]`` and ``D_IT[l]`` is ``N x N_T``.
    """

    H_RI: np.ndarray
    H_IT: list
    D_IT: list
    arch: RisArchitecture

    def __post_init__(self):
        N = self.arch.N
        self.H_RI = np.atleast_2d(np.asarray(self.H_RI, dtype=complex))
        self.H_IT = [_as_column_matrix(h) for h in self.H_IT]
        self.D_IT = [_as_column_matrix(d) for d in self.D_IT]
        if self.H_RI.shape[1] != N:
            raise DimensionMismatch(f"H_RI has {self.H_RI.shape[1]} columns, expected N={N}")
        if len(self.H_IT) < 2 or len(self.D_IT) != len(self.H_IT) - 1:
            raise DimensionMismatch("need L >= 2 channels and L-1 targets")
        nt = self.H_IT[0].shape[1]
        for m in self.H_IT + self.D_IT:
            if m.shape != (N, nt):
                raise DimensionMismatch(f"expected {N}x{nt} channel/target, got {m.shape}")

    @classmethod
    def from_single_antenna(cls, channels, targets, arch):
        return cls(
            channels.h_RI.conj()[None, :],
            [h[:, None] for h in channels.h_IT],
            [d[:, None] for d in targets.d],
            arch,
        )

    @property
    def L(self):
        return len(self.H_IT)

    @property
    def N_T(self):
        return self.H_IT[0].shape[1]

    @property
    def N_R(self):
        return self.H_RI.shape[0]

    def group_constraints(self):
        """Per-group ``(H_g, D_g)``, each ``Gs x N_T (L-1)``."""
        H = np.hstack(self.H_IT[1:])
        D = np.hstack(self.D_IT)
        return [(H[s], D[s]) for s in self.arch.groups()]

    def effective_channel(self, Theta):
        return self.H_RI @ Theta @ self.H_IT[0]

    def constraint_residuals(self, Theta):
        out = []
        for h, d in zip(self.H_IT[1:], self.D_IT):
            nd = np.linalg.norm(d)
            r = np.linalg.norm(Theta @ h - d)
            out.append(r / nd if nd > 0 else r)
        return np.array(out)

    def feasibility_deviation(self):
        devs = []
        for Hg, Dg in self.group_constraints():
            gh = Hg.conj().T @ Hg
            scale = np.linalg.norm(gh)
            diff = np.linalg.norm(gh - Dg.conj().T @ Dg)
            devs.append(diff / scale if scale > 0 else diff)
        return np.array(devs)


def matrix_rank(A, rank_tol=RANK_TOL):
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or not s[0] > eps_zero(A.shape[0]):
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def rank_reduce_constraints(H_g, D_g, rank_tol=RANK_TOL):
    """
    Replace ``Theta_g H_g = D_g`` by an equivalent system with full-column-rank ``A_g``.

    ``H_g = A_g B_g`` from the thin SVD (``A_g = U_r S_r``, ``B_g = V_r^H``);
    since ``B_g B_g^H = I`` the new right-hand side is ``D_g V_r``. Full-rank
    input is returned unchanged.
    """
    H_g = np.asarray(H_g, dtype=complex)
    D_g = np.asarray(D_g, dtype=complex)
    if H_g.shape != D_g.shape:
        raise DimensionMismatch(f"H_g {H_g.shape} and D_g {D_g.shape} differ")
    U, s, Vh = np.linalg.svd(H_g, full_matrices=False)
    if s.size == 0 or not s[0] > eps_zero(H_g.shape[0]):
        raise ZeroConstraint("constraint matrix vanishes")
    r = int(np.sum(s > rank_tol * s[0]))
    if r == H_g.shape[1]:
        return H_g, D_g
    A = U[:, :r] * s[:r]
    RHS = D_g @ Vh[:r].conj().T
    return A, RHS


def compute_tau(scenario, rank_tol=RANK_TOL):
    """Smallest group size that leaves free dimensions after the constraints."""
    full = scenario.N_T * (scenario.L - 1)
    ranks = [matrix_rank(Hg, rank_tol) for Hg, _ in scenario.group_constraints()]
    if any(r < min(scenario.arch.Gs, full) for r in ranks):
        return max(ranks) + 1
    return full + 1


@dataclass
class ReducedProblem:
    """
    Lower-dimensional problem ``Hbar0 + Hbar1 Theta_bar Hbar2`` with
    ``Theta_bar = diag(Theta_bar_1, ..., Theta_bar_G)``, blocks of size ``Gs - tau + 1``.
    """

    Hbar0: np.ndarray
    Hbar1: np.ndarray
    Hbar2: np.ndarray
    completions: list
    tau: int
    arch: RisArchitecture
    W: list = field(default_factory=list)
    V: list = field(default_factory=list)

    @property
    def block_size(self):
        return self.arch.Gs - self.tau + 1

    def effective_channel(self, Theta_bar_blocks):
        return self.Hbar0 + self.Hbar1 @ block_diag(Theta_bar_blocks) @ self.Hbar2


def build_reduced_problem(scenario, completions=None, rank_tol=RANK_TOL, check=True):
    """
    Pin the constrained columns of every block and expose the remaining freedom.

    Parameters
    ----------
    scenario : MultiAntennaScenario
    completions : list of (U_D, U_H), optional
        Per-group unitary completions; by default the canonical completions
        of the (rank-reduced) ``D_g`` and ``H_g``.

    Returns
    -------
    ReducedProblem
    """
    arch = scenario.arch
    if check:
        dev = scenario.feasibility_deviation()
        if np.any(dev > FEASIBILITY_TOL):
            raise Infeasible(f"Gram mismatch {dev.max():.3e} exceeds {FEASIBILITY_TOL}")
    tau = compute_tau(scenario, rank_tol)
    if arch.Gs < tau:
        raise GroupSizeTooSmall(
            f"Gs={arch.Gs} < tau={tau}: the feasible set is a single point, "
            "use unique_solution_small_group"
        )
    k = tau - 1
    if completions is None:
        completions = []
        for Hg, Dg in scenario.group_constraints():
            A, RHS = rank_reduce_constraints(Hg, Dg, rank_tol)
            completions.append((unitary_completion_matrix(RHS), unitary_completion_matrix(A)))
    Hbar0 = np.zeros((scenario.N_R, scenario.N_T), dtype=complex)
    H1, H2, Ws, Vs = [], [], [], []
    for s, (Ud, Uh) in zip(arch.groups(), completions):
        W = Ud.conj().T @ scenario.H_RI[:, s].conj().T
        V = Uh.conj().T @ scenario.H_IT[0][s]
        Hbar0 += W[:k].conj().T @ V[:k]
        H1.append(W[k:].conj().T)
        H2.append(V[k:])
        Ws.append(W)
        Vs.append(V)
    return ReducedProblem(
        Hbar0=Hbar0,
        Hbar1=np.hstack(H1),
        Hbar2=np.vstack(H2),
        completions=list(completions),
        tau=tau,
        arch=arch,
        W=Ws,
        V=Vs,
    )


def reconstruct_theta(reduced, Theta_bar_blocks, tol=UNITARY_TOL):
    """Full block-diagonal ``Theta`` from the free blocks of a reduced problem."""
    arch = reduced.arch
    b = reduced.block_size
    if len(Theta_bar_blocks) != arch.G:
        raise DimensionMismatch(f"expected {arch.G} blocks, got {len(Theta_bar_blocks)}")
    blocks = []
    for (Ud, Uh), T in zip(reduced.completions, Theta_bar_blocks):
        T = np.atleast_2d(np.asarray(T, dtype=complex))
        if T.shape != (b, b):
            raise DimensionMismatch(f"free block must be {b}x{b}, got {T.shape}")
        if np.max(np.abs(T.conj().T @ T - np.eye(b))) > tol:
            raise NotUnitaryInput("free block is not unitary")
        blocks.append(assemble_block(Ud, T, Uh, reduced.tau - 1))
    return block_diag(blocks)


def unique_solution_small_group(scenario, tol=UNITARY_TOL):
    """
    The only feasible matrix when ``Gs < tau``: ``Theta_g = D_g H_g^H (H_g H_g^H)^{-1}``.
    """
    blocks = []
    for Hg, Dg in scenario.group_constraints():
        if matrix_rank(Hg) < Hg.shape[0]:
            raise RankDeficient("H_g must have full row rank Gs")
        Tg = np.linalg.solve(Hg @ Hg.conj().T, Hg @ Dg.conj().T).conj().T
        if np.max(np.abs(Tg.conj().T @ Tg - np.eye(Tg.shape[0]))) > tol:
            raise Infeasible("the unique solution of the linear constraints is not unitary")
        blocks.append(Tg)
    return block_diag(blocks)


def solve_reduced_single_stream(reduced):
    """
    Optimal free blocks for a scalar effective channel (``N_R = N_T = 1``).

    Returns ``(blocks, power)`` with power ``(|Hbar0| + sum_g ||w_g|| ||v_g||)**2``.
    """
    if reduced.Hbar0.shape != (1, 1):
        raise DimensionMismatch("closed form needs a scalar effective channel")
    h0 = complex(reduced.Hbar0[0, 0])
    scale = np.linalg.norm(reduced.Hbar1) * np.linalg.norm(reduced.Hbar2) + abs(h0)
    phase = h0 / abs(h0) if abs(h0) > 1e-14 * scale else 1.0 + 0j
    b = reduced.block_size
    blocks = []
    total = abs(h0)
    for g in range(reduced.arch.G):
        sl = slice(g * b, (g + 1) * b)
        w = reduced.Hbar1[0, sl].conj()
        v = reduced.Hbar2[sl, 0]
        blocks.append(aligned_inner_block(w, v, phase))
        total += np.linalg.norm(w) * np.linalg.norm(v)
    return blocks, float(total ** 2)


def grid_search_phases(reduced, n_grid=360):
    """
    Exhaustive phase grid over 1x1 free blocks (``Gs = tau``), scalar channel only.

    Reference oracle for tests; cost is ``n_grid ** G``.
    """
    if reduced.block_size != 1 or reduced.Hbar0.shape != (1, 1):
        raise DimensionMismatch("grid search needs 1x1 free blocks and a scalar channel")
    G = reduced.arch.G
    h0 = reduced.Hbar0[0, 0]
    c = reduced.Hbar1[0, :] * reduced.Hbar2[:, 0]
    phases = np.exp(2j * np.pi * np.arange(n_grid) / n_grid)
    grids = np.meshgrid(*([np.arange(n_grid)] * G), indexing="ij")
    idx = np.stack([g.ravel() for g in grids], axis=1)
    vals = np.abs(h0 + (phases[idx] * c).sum(axis=1)) ** 2
    i = int(np.argmax(vals))
    best = float(vals[i])
    best_idx = idx[i]
    return [np.array([[phases[j]]]) for j in best_idx], best
