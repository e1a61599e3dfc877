"""
Closed-form optimal scattering matrices under fixed-reflection constraints.

The serving operator maximises ``|h_RI^H Theta h_IT1|^2`` while every
non-serving operator ``l`` sees a prescribed reflected channel
``Theta h_ITl = d_l``. Each block of Theta is split as
``U(D_g) diag(I, Theta_bar_g) U(H_g)^H``: the pinned part carries the
constraints and the free unitary ``Theta_bar_g`` is aligned with the
residual channels.
"""

from dataclasses import dataclass, field

import numpy as np

from .channels import ScenarioChannels
from .errors import (
    DegenerateElement,
    DegenerateGroup,
    DimensionMismatch,
    Infeasible,
    InvalidArchitecture,
    RankDeficient,
)
from .linalg import (
    RANK_TOL,
    block_diag,
    eps_zero,
    haar_unitary,
    psd_inv_sqrt,
    unitary_completion_matrix,
    unitary_completion_vector,
)

FEASIBILITY_TOL = 1e-8
GAMMA_ZERO_REL = 1e-14


@dataclass(frozen=True)
class RisArchitecture:
    """Block-diagonal structure: ``G`` groups of ``Gs`` interconnected elements."""

    N: int
    G: int
    Gs: int

    def __post_init__(self):
        if self.G < 1 or self.Gs < 1 or self.N != self.G * self.Gs:
            raise InvalidArchitecture(f"need N = G*Gs with G, Gs >= 1; got {self}")

    @classmethod
    def from_group_size(cls, N, Gs):
        if Gs < 1 or N % Gs:
            raise InvalidArchitecture(f"group size {Gs} does not divide N={N}")
        return cls(N, N // Gs, Gs)

    @classmethod
    def from_groups(cls, N, G):
        if G < 1 or N % G:
            raise InvalidArchitecture(f"group count {G} does not divide N={N}")
        return cls(N, G, N // G)

    @property
    def name(self):
        if self.Gs == 1:
            return "single-connected"
        if self.G == 1:
            return "fully-connected"
        return f"group-connected(Gs={self.Gs})"

    def groups(self):
        return [slice(g * self.Gs, (g + 1) * self.Gs) for g in range(self.G)]


@dataclass
class TargetReflections:
    """Fixed reflected channels ``d_l`` for the non-serving operators ``l = 2..L``."""

    d: list

    def __post_init__(self):
        self.d = [np.asarray(v, dtype=complex).ravel() for v in self.d]


@dataclass
class FeasibilityReport:
    deviations: np.ndarray
    tol: float = FEASIBILITY_TOL

    @property
    def per_group(self):
        return self.deviations <= self.tol

    @property
    def max_deviation(self):
        return float(np.max(self.deviations))

    @property
    def feasible(self):
        return bool(np.all(self.per_group))

    def summary(self):
        lines = [f"feasible={self.feasible} max_deviation={self.max_deviation:.3e}"]
        for g, dev in enumerate(self.deviations):
            flag = "ok" if dev <= self.tol else "VIOLATED"
            lines.append(f"  group {g}: deviation={dev:.3e} {flag}")
        return "\n".join(lines)


@dataclass
class DesignSolution:
    """
    Constructed scattering matrix and its closed-form optimal power (``P_T = 1``).

    ``gamma`` is the aligned term whose phase all free blocks follow.
    """

    Theta: np.ndarray
    optimal_power: float
    gamma: complex
    branch: str
    arch: RisArchitecture
    blocks: list = field(default_factory=list)


def _constraint_matrices(channels, targets, arch):
    L = channels.L
    if len(targets.d) != L - 1:
        raise DimensionMismatch(f"expected {L - 1} target vectors, got {len(targets.d)}")
    if channels.N != arch.N:
        raise DimensionMismatch(f"channels have N={channels.N}, architecture N={arch.N}")
    for d in targets.d:
        if d.size != arch.N:
            raise DimensionMismatch(f"target length {d.size} != N={arch.N}")
    H = np.stack(channels.h_IT[1:], axis=1)
    D = np.stack(targets.d, axis=1)
    return [(H[s], D[s]) for s in arch.groups()]


def check_feasibility(channels, targets, arch, tol=FEASIBILITY_TOL):
    """Per-group Gram-matrix test ``H_g^H H_g == D_g^H D_g`` (relative Frobenius deviation)."""
    devs = []
    for Hg, Dg in _constraint_matrices(channels, targets, arch):
        gh = Hg.conj().T @ Hg
        gd = Dg.conj().T @ Dg
        scale = np.linalg.norm(gh)
        diff = np.linalg.norm(gh - gd)
        devs.append(diff / scale if scale > 0 else diff)
    return FeasibilityReport(np.array(devs), tol)


def generate_targets(channels, arch, rng, identity=False):
    """
    Feasible targets ``D_g = V_g H_g`` with Haar-random ``V_g`` per group.

    With ``identity=True`` the targets equal the channels themselves.
    """
    if identity:
        return TargetReflections([h.copy() for h in channels.h_IT[1:]])
    return TargetReflections(random_targets(channels.h_IT[1:], arch, rng))


def random_targets(h_list, arch, rng):
    """``[V h for h in h_list]`` with one Haar block-diagonal ``V`` shared by all operators."""
    V = haar_unitary(arch.Gs, rng, size=arch.G)
    return [apply_block_diag(V, np.asarray(h, dtype=complex)) for h in h_list]


def apply_block_diag(blocks, x):
    """``block_diag(blocks) @ x`` for a stack of equal blocks, without forming the matrix."""
    G, Gs, _ = blocks.shape
    return np.einsum("gij,gj->gi", blocks, x.reshape(G, Gs)).ravel()


def received_power(Theta, h_RI, h_IT1, P_T=1.0, h_RT=0j):
    """``P_T |h_RT + h_RI^H Theta h_IT1|^2``."""
    Theta = np.asarray(Theta)
    h_RI = np.asarray(h_RI).ravel()
    h_IT1 = np.asarray(h_IT1).ravel()
    if Theta.shape != (h_RI.size, h_IT1.size):
        raise DimensionMismatch(
            f"Theta {Theta.shape} incompatible with vectors {h_RI.size}, {h_IT1.size}"
        )
    return P_T * abs(h_RT + np.vdot(h_RI, Theta @ h_IT1)) ** 2


def _phase(gamma, scale):
    if abs(gamma) <= GAMMA_ZERO_REL * scale:
        return 1.0 + 0j
    return gamma / abs(gamma)


def aligned_inner_block(w_free, v_free, phase):
    """
    Optimal free unitary: maps ``v_free`` onto ``phase * w_free`` (up to scale).

    Falls back to ``phase * I`` when either residual vanishes, since the
    block then contributes nothing to the objective.
    """
    k = w_free.size
    tol = eps_zero(k)
    if np.linalg.norm(w_free) <= tol or np.linalg.norm(v_free) <= tol:
        return phase * np.eye(k, dtype=complex)
    Uw = unitary_completion_vector(w_free)
    Uv = unitary_completion_vector(v_free)
    return phase * (Uw @ Uv.conj().T)


def assemble_block(U_out, inner, U_in, pinned):
    """``U_out diag(I_pinned, inner) U_in^H``."""
    n = U_out.shape[0]
    mid = np.zeros((n, n), dtype=complex)
    mid[:pinned, :pinned] = np.eye(pinned)
    mid[pinned:, pinned:] = inner
    return U_out @ mid @ U_in.conj().T


def group_rank(Hg):
    s = np.linalg.svd(Hg, compute_uv=False)
    if s.size == 0 or not s[0] > eps_zero(Hg.shape[0]):
        return 0
    return int(np.sum(s > RANK_TOL * s[0]))


def solve_single_connected(channels, targets, h_RT=0j):
    """Diagonal solution ``Theta_nn = exp(i(angle d_n - angle h_IT2,n))``; fully determined by the constraint."""
    if channels.L != 2:
        raise DimensionMismatch("single-connected closed form is for two operators")
    h2 = channels.h_IT[1]
    d = np.asarray(targets.d[0], dtype=complex).ravel()
    if d.size != h2.size:
        raise DimensionMismatch("target and channel lengths differ")
    tol = eps_zero(1)
    bad = np.flatnonzero(np.abs(h2) <= tol)
    if bad.size:
        raise DegenerateElement(f"|h_IT2| vanishes at elements {bad.tolist()}")
    mismatch = np.abs(np.abs(d) - np.abs(h2)) / np.abs(h2)
    if np.any(mismatch > FEASIBILITY_TOL):
        arch = RisArchitecture(h2.size, h2.size, 1)
        raise Infeasible(
            "per-element moduli of d and h_IT2 differ",
            check_feasibility(channels, targets, arch),
        )
    phases = np.exp(1j * np.angle(d * np.conj(h2)))
    Theta = np.diag(phases)
    value = h_RT + np.vdot(channels.h_RI, phases * channels.h_IT[0])
    return DesignSolution(
        Theta=Theta,
        optimal_power=float(abs(value) ** 2),
        gamma=complex(value),
        branch="single-connected",
        arch=RisArchitecture(h2.size, h2.size, 1),
        blocks=[np.array([[p]]) for p in phases],
    )


def two_operator_optimal_power(channels, targets, arch, h_RT=0j):
    """Optimal value for ``L = 2`` and ``Gs >= 2`` from inner products and norms only."""
    h_RI, h1, h2 = channels.h_RI, channels.h_IT[0], channels.h_IT[1]
    d = targets.d[0]
    aligned = h_RT
    residual = 0.0
    for s in arch.groups():
        dg, hg, rg, ag = d[s], h2[s], h_RI[s], h1[s]
        nd2 = np.vdot(dg, dg).real
        nh2 = np.vdot(hg, hg).real
        dr = np.vdot(dg, rg)
        ha = np.vdot(hg, ag)
        aligned += np.conj(dr) * ha / np.sqrt(nd2 * nh2)
        b1 = max(np.vdot(rg, rg).real - abs(dr) ** 2 / nd2, 0.0)
        b2 = max(np.vdot(ag, ag).real - abs(ha) ** 2 / nh2, 0.0)
        residual += np.sqrt(b1 * b2)
    return float((abs(aligned) + residual) ** 2)


def multi_operator_optimal_power(channels, targets, arch, h_RT=0j):
    """
    Optimal value for any ``L`` with full-rank constraint blocks.

    ``Gs >= L`` uses the Gram-whitened projections; ``Gs < L`` evaluates the
    unique feasible block ``D_g H_g^H (H_g H_g^H)^{-1}``.
    """
    L = channels.L
    h_RI, h1 = channels.h_RI, channels.h_IT[0]
    aligned = h_RT
    residual = 0.0
    for s, (Hg, Dg) in zip(arch.groups(), _constraint_matrices(channels, targets, arch)):
        rg, ag = h_RI[s], h1[s]
        if arch.Gs >= L:
            Wd = psd_inv_sqrt(Dg.conj().T @ Dg)
            Wh = psd_inv_sqrt(Hg.conj().T @ Hg)
            a1 = Wd @ (Dg.conj().T @ rg)
            a2 = Wh @ (Hg.conj().T @ ag)
            aligned += np.vdot(a1, a2)
            b1 = max(np.vdot(rg, rg).real - np.vdot(a1, a1).real, 0.0)
            b2 = max(np.vdot(ag, ag).real - np.vdot(a2, a2).real, 0.0)
            residual += np.sqrt(b1 * b2)
        else:
            x = np.linalg.solve(Hg @ Hg.conj().T, ag)
            aligned += np.vdot(rg, Dg @ (Hg.conj().T @ x))
    return float((abs(aligned) + residual) ** 2)


def _prepare_groups(channels, targets, arch, rank_reduce):
    """Per-group constraint data after optional rank reduction."""
    from .multiantenna import rank_reduce_constraints

    out = []
    for Hg, Dg in _constraint_matrices(channels, targets, arch):
        r = group_rank(Hg)
        if r == 0:
            if np.linalg.norm(Dg) > eps_zero(arch.Gs):
                raise DegenerateGroup("channel block vanishes but its target does not")
            out.append((None, None, 0))
            continue
        if r < min(Hg.shape):
            if not rank_reduce:
                raise RankDeficient(
                    f"constraint block has rank {r} < {min(Hg.shape)}; "
                    "use multiantenna.rank_reduce_constraints"
                )
            Hg, Dg = rank_reduce_constraints(Hg, Dg)
        out.append((Hg, Dg, r))
    return out


def _solve_blocks(channels, targets, arch, h_RT, rank_reduce, completions=None):
    """
    Shared Prop.-4 / unique-solution construction.

    ``completions`` optionally overrides the unitary completions per group as
    ``(U_D, U_H)`` pairs; the default is the canonical construction.
    """
    h_RI, h1 = channels.h_RI, channels.h_IT[0]
    prepared = _prepare_groups(channels, targets, arch, rank_reduce)
    scale = np.linalg.norm(h_RI) * np.linalg.norm(h1)
    plans = []
    gamma = complex(h_RT)
    for g, (s, (Hg, Dg, r)) in enumerate(zip(arch.groups(), prepared)):
        rg, ag = h_RI[s], h1[s]
        if r == arch.Gs:
            # unique feasible block
            Tg = np.linalg.solve(Hg @ Hg.conj().T, Hg @ Dg.conj().T).conj().T
            gamma += np.vdot(rg, Tg @ ag)
            plans.append(("fixed", Tg))
            continue
        if r == 0:
            Ud = np.eye(arch.Gs, dtype=complex)
            Uh = Ud
        elif completions is not None:
            Ud, Uh = completions[g]
        else:
            Ud = unitary_completion_matrix(Dg)
            Uh = unitary_completion_matrix(Hg)
        w = Ud.conj().T @ rg
        v = Uh.conj().T @ ag
        gamma += np.vdot(w[:r], v[:r])
        plans.append(("free", Ud, Uh, r, w[r:], v[r:]))
    phase = _phase(gamma, scale)
    blocks = []
    residual = 0.0
    for plan in plans:
        if plan[0] == "fixed":
            blocks.append(plan[1])
            continue
        _, Ud, Uh, r, wf, vf = plan
        inner = aligned_inner_block(wf, vf, phase)
        residual += np.linalg.norm(wf) * np.linalg.norm(vf)
        blocks.append(assemble_block(Ud, inner, Uh, r))
    return blocks, gamma, residual


def solve_group_two_operator(channels, targets, arch, direct_path=None, check=True):
    """
    Two-operator optimum for group/fully-connected RIS (``Gs >= 2``).

    ``optimal_power`` is the closed form computed from inner products of the
    channels; ``Theta`` is built block by block from vector completions.
    """
    if channels.L != 2:
        raise DimensionMismatch("two-operator solver needs exactly two BS-RIS channels")
    if arch.Gs < 2:
        raise InvalidArchitecture("use solve_single_connected for Gs = 1")
    h_RT = 0j if direct_path is None else complex(direct_path)
    h2, d = channels.h_IT[1], targets.d[0]
    for s in arch.groups():
        if np.linalg.norm(h2[s]) <= eps_zero(arch.Gs) and np.linalg.norm(d[s]) > eps_zero(arch.Gs):
            raise DegenerateGroup("h_IT2 vanishes on a group where the target does not")
    if check:
        report = check_feasibility(channels, targets, arch)
        if not report.feasible:
            raise Infeasible("targets violate the per-group norm condition", report)
    blocks, gamma, _ = _solve_blocks(channels, targets, arch, h_RT, rank_reduce=True)
    degenerate = any(np.linalg.norm(h2[s]) <= eps_zero(arch.Gs) for s in arch.groups())
    if degenerate:
        value = received_power(block_diag(blocks), channels.h_RI, channels.h_IT[0], h_RT=h_RT)
    else:
        value = two_operator_optimal_power(channels, targets, arch, h_RT)
    return DesignSolution(
        Theta=block_diag(blocks),
        optimal_power=value,
        gamma=complex(gamma),
        branch="fully-connected" if arch.G == 1 else "group-connected",
        arch=arch,
        blocks=blocks,
    )


def solve_multi_operator(channels, targets, arch, direct_path=None, rank_reduce=True, check=True,
                         completions=None):
    """
    Optimum for ``L >= 2`` operators.

    ``Gs >= L``: decomposition with matrix completions of ``H_g`` and ``D_g``.
    ``Gs < L``: the unique feasible ``Theta_g = D_g H_g^H (H_g H_g^H)^{-1}``.
    Rank-deficient blocks are reduced first unless ``rank_reduce`` is False,
    in which case :class:`RankDeficient` is raised. ``completions`` replaces
    the canonical per-group ``(U(D_g), U(H_g))`` pairs.
    """
    h_RT = 0j if direct_path is None else complex(direct_path)
    if check:
        report = check_feasibility(channels, targets, arch)
        if not report.feasible:
            raise Infeasible("targets violate H_g^H H_g = D_g^H D_g", report)
    blocks, gamma, residual = _solve_blocks(channels, targets, arch, h_RT, rank_reduce, completions)
    for B in blocks:
        if np.max(np.abs(B.conj().T @ B - np.eye(B.shape[0]))) > 1e-9:
            raise Infeasible("constructed block is not unitary; targets are inconsistent")
    L = channels.L
    ranks = [group_rank(Hg) for Hg, _ in _constraint_matrices(channels, targets, arch)]
    full_rank = all(r == min(arch.Gs, L - 1) for r in ranks)
    if full_rank:
        value = multi_operator_optimal_power(channels, targets, arch, h_RT)
    else:
        value = float((abs(gamma) + residual) ** 2)
    if arch.Gs >= L:
        branch = "fully-connected" if arch.G == 1 else "group-connected"
    else:
        branch = "unique"
    return DesignSolution(
        Theta=block_diag(blocks),
        optimal_power=value,
        gamma=complex(gamma),
        branch=branch,
        arch=arch,
        blocks=blocks,
    )


def solve(channels, targets, arch, direct_path=None):
    """Dispatch to the closed form matching ``(L, Gs)``."""
    if channels.L == 2 and arch.Gs == 1:
        return solve_single_connected(channels, targets, 0j if direct_path is None else direct_path)
    if channels.L == 2:
        return solve_group_two_operator(channels, targets, arch, direct_path)
    return solve_multi_operator(channels, targets, arch, direct_path)


def constraint_residuals(Theta, channels, targets):
    """Relative residuals ``||Theta h_ITl - d_l|| / ||d_l||`` for each non-serving operator."""
    out = []
    for h, d in zip(channels.h_IT[1:], targets.d):
        nd = np.linalg.norm(d)
        r = np.linalg.norm(Theta @ h - d)
        out.append(r / nd if nd > 0 else r)
    return np.array(out)


def block_unitarity_error(Theta, arch):
    err = 0.0
    I = np.eye(arch.Gs)
    for s in arch.groups():
        B = Theta[s, s]
        err = max(err, float(np.max(np.abs(B.conj().T @ B - I))))
    return err


def random_feasible_theta(channels, targets, arch, rng, size=1):
    """
    Uniformly random feasible scattering matrices: the same decomposition as
    the solver, with Haar-random free blocks in place of the optimal ones.
    """
    prepared = _prepare_groups(channels, targets, arch, rank_reduce=True)
    out = np.zeros((size, arch.N, arch.N), dtype=complex)
    for s, (Hg, Dg, r) in zip(arch.groups(), prepared):
        if r == arch.Gs:
            Tg = np.linalg.solve(Hg @ Hg.conj().T, Hg @ Dg.conj().T).conj().T
            out[:, s, s] = Tg
            continue
        if r == 0:
            Ud = Uh = np.eye(arch.Gs, dtype=complex)
        else:
            Ud = unitary_completion_matrix(Dg)
            Uh = unitary_completion_matrix(Hg)
        k = arch.Gs - r
        inner = haar_unitary(k, rng, size=size)
        mid = np.zeros((size, arch.Gs, arch.Gs), dtype=complex)
        mid[:, :r, :r] = np.eye(r)
        mid[:, r:, r:] = inner
        out[:, s, s] = Ud @ mid @ Uh.conj().T
    return out if size > 1 else out[0]


def optimal_power_batch(h_RI, h_IT, d, Gs, h_RT=None):
    """
    Vectorised closed-form optimum over a stack of independent instances.

    Parameters
    ----------
    h_RI : ndarray, shape (T, N)
    h_IT : ndarray, shape (T, L, N)
        ``h_IT[:, 0]`` is the serving operator.
    d : ndarray, shape (T, L-1, N)
    Gs : int
        Group size; must divide N.
    h_RT : ndarray, shape (T,), optional

    Returns
    -------
    ndarray, shape (T,)
        Optimal ``|h_RT + h_RI^H Theta* h_IT1|^2`` for each instance, assuming
        feasible targets and full-rank constraint blocks.
    """
    h_RI = np.asarray(h_RI)
    h_IT = np.asarray(h_IT)
    d = np.asarray(d)
    T, L, N = h_IT.shape
    if N % Gs:
        raise InvalidArchitecture(f"Gs={Gs} does not divide N={N}")
    G = N // Gs
    r = h_RI.reshape(T, G, Gs)
    a = h_IT[:, 0].reshape(T, G, Gs)
    # (T, G, Gs, L-1)
    H = np.moveaxis(h_IT[:, 1:].reshape(T, L - 1, G, Gs), 1, -1)
    D = np.moveaxis(d.reshape(T, L - 1, G, Gs), 1, -1)
    aligned = np.zeros(T, dtype=complex) if h_RT is None else np.asarray(h_RT, dtype=complex).copy()
    if Gs >= L:
        Hh = np.conj(np.swapaxes(H, -1, -2))
        Dh = np.conj(np.swapaxes(D, -1, -2))
        Mh = Hh @ H
        Md = Dh @ D
        Hta = (Hh @ a[..., None])[..., 0]
        Dtr = (Dh @ r[..., None])[..., 0]
        xa = np.linalg.solve(Mh, Hta[..., None])[..., 0]
        xr = np.linalg.solve(Md, Dtr[..., None])[..., 0]
        # a1^H a2 = r^H D (D^H D)^{-1/2} (H^H H)^{-1/2} H^H a; with equal Gram matrices
        # this is r^H D M^{-1} H^H a
        cross = np.sum(np.conj(Dtr) * xa, axis=-1)
        p1 = np.sum(np.conj(Dtr) * xr, axis=-1).real
        p2 = np.sum(np.conj(Hta) * xa, axis=-1).real
        b1 = np.maximum(np.sum(np.abs(r) ** 2, axis=-1) - p1, 0.0)
        b2 = np.maximum(np.sum(np.abs(a) ** 2, axis=-1) - p2, 0.0)
        aligned = aligned + np.sum(cross, axis=-1)
        residual = np.sum(np.sqrt(b1 * b2), axis=-1)
        return (np.abs(aligned) + residual) ** 2
    Hh = np.conj(np.swapaxes(H, -1, -2))
    x = np.linalg.solve(H @ Hh, a[..., None])  # (T, G, Gs, 1)
    y = D @ (Hh @ x)
    aligned = aligned + np.sum(np.conj(r) * y[..., 0], axis=(-1, -2))
    return np.abs(aligned) ** 2
