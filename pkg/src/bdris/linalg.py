"""
Dense complex linear-algebra primitives.

Unitary completions of vectors and full-column-rank matrices, PSD square
roots, block-diagonal assembly and Haar-random unitaries. Everything here is a
pure function of its arguments; randomness comes in through an explicit
``numpy.random.Generator``.
"""

import numpy as np

from .errors import DimensionMismatch, EmptyInput, NotPSD, RankDeficient, ZeroVector

RANK_TOL = 1e-10


def eps_zero(dim):
    """Absolute norm below which a vector of length ``dim`` counts as zero."""
    return 1e-12 * max(1, dim)


def unitary_completion_vector(x, n=None):
    """
    Unitary matrix whose first column is ``x / ||x||``.

    Built from a single Householder reflector mapping ``e_1`` onto the
    phase-rotated unit vector, then multiplied by that phase. When ``x`` is a
    positive multiple of ``e_1`` the identity is returned.

    Parameters
    ----------
    x : array_like, shape (n,)
        Nonzero complex vector.
    n : int, optional
        Expected length of ``x``.

    Returns
    -------
    U : ndarray, shape (n, n)
        Unitary with ``U[:, 0] == x / ||x||`` and ``U^H x == ||x|| e_1``.
    """
    x = np.asarray(x, dtype=complex).ravel()
    if n is not None and x.size != n:
        raise DimensionMismatch(f"vector has length {x.size}, expected {n}")
    n = x.size
    if n == 0:
        raise DimensionMismatch("empty vector")
    norm = np.linalg.norm(x)
    if not norm > eps_zero(n):
        raise ZeroVector(f"cannot complete a vector of norm {norm:.3e}")
    u = x / norm
    first = u[0]
    phase = first / abs(first) if first != 0 else 1.0 + 0j
    v = u * np.conj(phase)  # v[0] = |u[0]| >= 0
    tail = v[1:]
    tail_sq = np.vdot(tail, tail).real
    if tail_sq == 0.0:
        return phase * np.eye(n, dtype=complex)
    # Parlett's form of 1 - v[0], avoids cancellation when v is near e_1
    w = np.empty(n, dtype=complex)
    w[0] = tail_sq / (1.0 + v[0].real)
    w[1:] = -tail
    w_sq = w[0].real ** 2 + tail_sq
    H = np.eye(n, dtype=complex) - (2.0 / w_sq) * np.outer(w, np.conj(w))
    return phase * H


def polar_factor(X):
    """Orthonormal factor ``X (X^H X)^{-1/2}`` of a full-column-rank matrix."""
    X = np.asarray(X, dtype=complex)
    if X.ndim == 1:
        X = X[:, None]
    n, m = X.shape
    if m == 0 or m > n:
        raise DimensionMismatch(f"need 1 <= m <= n, got shape {X.shape}")
    A, s, Bh = np.linalg.svd(X, full_matrices=False)
    if not s[0] > eps_zero(n) or s[-1] <= RANK_TOL * s[0]:
        raise RankDeficient(
            f"singular values {s[-1]:.3e}/{s[0]:.3e} below rank tolerance; "
            "reduce the constraints first (multiantenna.rank_reduce_constraints)"
        )
    return A @ Bh


def unitary_completion_matrix(X):
    """
    Unitary ``U`` with ``U[:, :m]`` equal to the polar factor of ``X``.

    The single-column case is delegated to :func:`unitary_completion_vector`
    so both constructions agree bit for bit.
    """
    X = np.asarray(X, dtype=complex)
    if X.ndim == 1:
        X = X[:, None]
    n, m = X.shape
    if m == 1:
        return unitary_completion_vector(X[:, 0])
    P = polar_factor(X)
    if m == n:
        return P
    Q, _ = np.linalg.qr(np.hstack([P, np.eye(n, dtype=complex)]), mode="reduced")
    U = np.empty((n, n), dtype=complex)
    U[:, :m] = P
    U[:, m:] = Q[:, m:n]
    return U


def _check_hermitian(A):
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    scale = max(1.0, np.max(np.abs(A), initial=0.0))
    if np.max(np.abs(A - A.conj().T), initial=0.0) > 1e-10 * scale:
        raise NotPSD("matrix is not Hermitian")
    return 0.5 * (A + A.conj().T)


def _clamped_eigh(A):
    A = _check_hermitian(A)
    lam, V = np.linalg.eigh(A)
    n = A.shape[0]
    floor = -1e-8 * abs(np.trace(A).real) / n
    if lam.size and lam[0] < floor:
        raise NotPSD(f"eigenvalue {lam[0]:.3e} below {floor:.3e}")
    return np.clip(lam, 0.0, None), V


def psd_sqrt(A):
    """Hermitian square root of a Hermitian PSD matrix (tiny negative eigenvalues clamped)."""
    lam, V = _clamped_eigh(A)
    B = (V * np.sqrt(lam)) @ V.conj().T
    return 0.5 * (B + B.conj().T)


def psd_inv_sqrt(A):
    """Inverse square root of a Hermitian positive-definite matrix."""
    lam, V = _clamped_eigh(A)
    if lam.size and lam[0] <= RANK_TOL * lam[-1]:
        raise RankDeficient("matrix is singular to working precision")
    B = (V / np.sqrt(lam)) @ V.conj().T
    return 0.5 * (B + B.conj().T)


def block_diag(blocks):
    """Assemble square blocks along the diagonal; off-block entries are exactly zero."""
    blocks = [np.atleast_2d(np.asarray(b, dtype=complex)) for b in blocks]
    if not blocks:
        raise EmptyInput("block_diag needs at least one block")
    for b in blocks:
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise DimensionMismatch(f"block of shape {b.shape} is not square")
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n), dtype=complex)
    i = 0
    for b in blocks:
        k = b.shape[0]
        out[i:i + k, i:i + k] = b
        i += k
    return out


def haar_unitary(n, rng, size=None):
    """
    Haar-distributed unitary matrix (or a stack of ``size`` of them).

    QR of a standard complex Gaussian matrix with the diagonal of ``R``
    phase-normalised, which makes the distribution exactly Haar.
    """
    if n < 1:
        raise DimensionMismatch("n must be >= 1")
    shape = (n, n) if size is None else (size, n, n)
    Z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    ph = d / np.abs(d)
    return Q * ph[..., None, :]


def is_unitary(U, tol=1e-10):
    U = np.asarray(U)
    return np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) <= tol
