"""Small dense symmetric linear algebra helpers.

Everything here is eigendecomposition based: pseudo-inverse with an explicit
rank cutoff, definiteness classification, kernel bases, PSD square roots, and
the spectral radius of linear operators acting on L-tuples of square matrices
(the certificate behind mean-square stability).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

PINV_TOL = 1e-10
PSD_TOL = 1e-9
DENSE_RADIUS_LIMIT = 400


class Definiteness(Enum):
    POSITIVE_DEFINITE = "positive_definite"
    POSITIVE_SEMIDEFINITE = "positive_semidefinite"
    INDEFINITE = "indefinite"


@dataclass(frozen=True)
class SymEig:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, orthogonal


def _require_symmetric(S: np.ndarray, what: str) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"{what}: expected a square matrix, got shape {S.shape}")
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    if S.size and float(np.max(np.abs(S - S.T))) > 1e-10 * scale:
        raise ValueError(f"{what}: matrix is not symmetric")
    return S


def sym_eig(S: np.ndarray) -> SymEig:
    """Symmetric eigendecomposition with eigenvalues in descending order."""
    S = _require_symmetric(S, "sym_eig")
    w, V = np.linalg.eigh(S)
    return SymEig(eigenvalues=w[::-1].copy(), eigenvectors=V[:, ::-1].copy())


def pinv_sym(S: np.ndarray, tol: float = PINV_TOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a symmetric matrix.

    Eigenvalues with ``|lam| <= tol * max(1, |lam|_max)`` are treated as zero;
    the rest are inverted.  The cutoff is the declared rank decision that the
    regularity tests elsewhere depend on.
    """
    S = _require_symmetric(S, "pinv_sym")
    if S.size == 0:
        return S.copy()
    w, V = np.linalg.eigh(S)
    cut = tol * max(1.0, float(np.max(np.abs(w))))
    inv = np.where(np.abs(w) > cut, 1.0 / np.where(w == 0.0, 1.0, w), 0.0)
    out = (V * inv) @ V.T
    return 0.5 * (out + out.T)


def psd_check(S: np.ndarray, tol: float | None = None) -> Definiteness:
    """Classify a symmetric matrix by its minimum eigenvalue.

    PD if ``lam_min > tol``, PSD if ``lam_min > -tol``, else indefinite.
    Default ``tol = 1e-9 * max(1, ||S||_2)``.
    """
    S = _require_symmetric(S, "psd_check")
    if S.size == 0:
        return Definiteness.POSITIVE_SEMIDEFINITE
    w = np.linalg.eigvalsh(S)
    if tol is None:
        tol = PSD_TOL * max(1.0, float(np.max(np.abs(w))))
    lam_min = float(w[0])
    if lam_min > tol:
        return Definiteness.POSITIVE_DEFINITE
    if lam_min > -tol:
        return Definiteness.POSITIVE_SEMIDEFINITE
    return Definiteness.INDEFINITE


def kernel_basis(S: np.ndarray, tol: float = PINV_TOL) -> np.ndarray:
    """Orthonormal basis of the numerical kernel of a symmetric matrix.

    Columns span the eigenspace with ``|lam| <= tol * max(1, |lam|_max)``.
    Returns a (p, 0) matrix when the kernel is trivial.
    """
    S = _require_symmetric(S, "kernel_basis")
    if S.size == 0:
        return S.copy()
    w, V = np.linalg.eigh(S)
    cut = tol * max(1.0, float(np.max(np.abs(w))))
    mask = np.abs(w) <= cut
    return V[:, mask].copy()


def sqrt_psd(S: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Unique symmetric PSD square root.

    Eigenvalues in ``[-tol, tol]`` are treated as exact zeros (round-off from
    the monotone solver iterates), which keeps the root's rank consistent
    with :func:`kernel_basis`; anything below ``-tol`` is rejected.
    """
    S = _require_symmetric(S, "sqrt_psd")
    if S.size == 0:
        return S.copy()
    w, V = np.linalg.eigh(S)
    if tol is None:
        tol = PSD_TOL * max(1.0, float(np.max(np.abs(w))))
    lam_min = float(w[0])
    if lam_min < -tol:
        raise ValueError(f"sqrt_psd: matrix is indefinite (lambda_min = {lam_min:.6g})")
    root = np.where(w > tol, np.sqrt(np.clip(w, 0.0, None)), 0.0)
    out = (V * root) @ V.T
    return 0.5 * (out + out.T)


class PowerIterationError(RuntimeError):
    """Power iteration failed to settle; carries the last two Rayleigh quotients."""

    def __init__(self, quotients: tuple[float, float], iterations: int):
        self.quotients = quotients
        self.iterations = iterations
        super().__init__(
            f"power iteration did not converge in {iterations} iterations; "
            f"last Rayleigh quotients {quotients[0]:.12g}, {quotients[1]:.12g}"
        )


TupleMap = Callable[[Sequence[np.ndarray]], Sequence[np.ndarray]]


def tuple_operator_spectral_radius(
    apply: TupleMap,
    L: int,
    n: int,
    method: str = "auto",
    tol: float = 1e-10,
    max_iter: int = 100_000,
) -> float:
    """Spectral radius of a linear map on L-tuples of n-by-n matrices.

    The operator matrix of size (L n^2) x (L n^2) is assembled by applying the
    map to every canonical basis tuple.  ``method='dense'`` takes exact
    eigenvalues, ``'power'`` runs norm-quotient power iteration, and
    ``'auto'`` picks dense while ``L n^2 <= 400``.
    """
    dim = L * n * n
    if method not in ("auto", "dense", "power"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        method = "dense" if dim <= DENSE_RADIUS_LIMIT else "power"

    def to_vec(tup):
        return np.concatenate([np.asarray(t, dtype=float).ravel() for t in tup])

    def from_vec(v):
        return [v[i * n * n:(i + 1) * n * n].reshape(n, n) for i in range(L)]

    if method == "dense":
        T = np.empty((dim, dim))
        for col in range(dim):
            e = np.zeros(dim)
            e[col] = 1.0
            T[:, col] = to_vec(apply(from_vec(e)))
        if dim == 0:
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvals(T))))

    v = to_vec([np.eye(n) for _ in range(L)])
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        return 0.0
    v /= nv
    prev_q = np.inf
    for it in range(max_iter):
        w = to_vec(apply(from_vec(v)))
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        q = nw  # ||A v|| with ||v|| = 1
        if abs(q - prev_q) <= tol * max(1.0, q):
            return q
        v = w / nw
        prev_q = q
    raise PowerIterationError((prev_q, q), max_iter)
