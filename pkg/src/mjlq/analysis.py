"""Solvability preconditions and certificates.

* ``check_set_S`` - membership of a shift Ptilde in the feasible set: the
  per-mode block weight matrix must be PSD and the kernel of the shifted
  input weight must sit inside ker C_i intersect ker D_i.
* ``region_scan`` - grid evaluation of membership for scalar-state problems
  (the CSV behind the feasibility-region plots).
* ``exact_observability`` - Gramian test for the noisy output pair: no
  nonzero initial state may produce an almost-surely zero output.
* ``ms_stability`` - spectral radius of the closed-loop second-moment
  operator; radius below one certifies mean-square decay from any start.
* ``maximality_check`` - PSD-order domination of a solution over candidates.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .model import CostWeights, MjlsModel
from .numlin import (
    Definiteness,
    kernel_basis,
    psd_check,
    tuple_operator_spectral_radius,
)
from .riccati import coupled_sum, shifted_weights

BLOCK_PSD_TOL = 1e-9
KERNEL_TOL = 1e-8
STABILITY_MARGIN = 1e-9


@dataclass(frozen=True)
class SetSReport:
    """Per-mode evidence for feasible-set membership of a shift."""

    member: bool
    block_lambda_min: np.ndarray   # (L,) smallest eigenvalue of each block
    kernel_defects: np.ndarray     # (L,) max of |C_i V|, |D_i V| over ker(Rt_i) basis V
    failing_modes: tuple           # 0-based indices failing either test
    reasons: tuple                 # matching human-readable reasons


@dataclass(frozen=True)
class RegionScan:
    """Row-major grid of scalar shifts with membership flags."""

    points: np.ndarray  # (npts, L)
    member: np.ndarray  # (npts,) bool


@dataclass(frozen=True)
class ObservabilityReport:
    """Mode-conditioned output Gramians and their definiteness."""

    observable: bool
    gramians: np.ndarray    # (L, n, n)
    lambda_min: np.ndarray  # (L,)
    horizon: int


@dataclass(frozen=True)
class StabilityCertificate:
    """Second-moment spectral radius of a closed loop."""

    spectral_radius: float
    stable: bool
    closed_loop_A: np.ndarray  # (L, n, n)  A_i + C_i F_i
    closed_loop_B: np.ndarray  # (L, n, n)  B_i + D_i F_i
    margin: float


def check_set_S(
    model: MjlsModel,
    weights: CostWeights,
    Ptilde: np.ndarray,
    tol: float = BLOCK_PSD_TOL,
) -> SetSReport:
    """Test a symmetric per-mode shift for feasibility.

    For every mode the (n+m) block matrix ``[[Qt_i, Lt_i'], [Lt_i, Rt_i]]``
    built by :func:`mjlq.riccati.shifted_weights` must be PSD within
    ``tol * max(1, |block|)``, and the numerical kernel of ``Rt_i`` must be
    annihilated by C_i and D_i within ``KERNEL_TOL * max(1, |C_i|, |D_i|)``.
    """
    L = model.L
    sw = shifted_weights(model, weights, Ptilde)
    lam_min = np.empty(L)
    defects = np.zeros(L)
    failing: list[int] = []
    reasons: list[str] = []
    for i in range(L):
        block = np.block([[sw.Qt[i], sw.Lt[i].T], [sw.Lt[i], sw.Rt[i]]])
        block = 0.5 * (block + block.T)
        w = np.linalg.eigvalsh(block)
        lam_min[i] = w[0]
        block_ok = w[0] > -tol * max(1.0, float(np.max(np.abs(w))))

        V = kernel_basis(sw.Rt[i])
        if V.shape[1]:
            defects[i] = max(
                float(np.max(np.abs(model.C[i] @ V))),
                float(np.max(np.abs(model.D[i] @ V))),
            )
        scale = max(1.0, float(np.max(np.abs(model.C[i]))), float(np.max(np.abs(model.D[i]))))
        kernel_ok = defects[i] <= KERNEL_TOL * scale

        if not (block_ok and kernel_ok):
            failing.append(i)
            if not block_ok:
                reasons.append("block indefinite")
            else:
                reasons.append("kernel inclusion failed")
    return SetSReport(
        member=not failing,
        block_lambda_min=lam_min,
        kernel_defects=defects,
        failing_modes=tuple(failing),
        reasons=tuple(reasons),
    )


def region_scan(
    model: MjlsModel,
    weights: CostWeights,
    bounds: list[tuple[float, float]],
    step: float,
) -> RegionScan:
    """Evaluate feasibility on a rectangular grid of scalar shifts.

    Only defined for scalar-state problems with at most three modes;
    ``bounds`` gives one (lo, hi) interval per mode and ``step`` the common
    grid spacing.  Points are emitted in row-major order.
    """
    if model.n != 1:
        raise ValueError("region_scan is only supported for scalar-state problems (n = 1)")
    if model.L > 3:
        raise ValueError("region_scan supports at most 3 modes")
    if len(bounds) != model.L:
        raise ValueError(f"expected {model.L} (lo, hi) bounds, got {len(bounds)}")
    if step <= 0:
        raise ValueError("step must be positive")

    axes = []
    for lo, hi in bounds:
        count = int(np.floor((hi - lo) / step + 1e-9)) + 1 if hi >= lo else 0
        axes.append([lo + k * step for k in range(count)])

    pts: list[tuple] = []
    member: list[bool] = []
    for combo in product(*axes):
        Ptilde = np.array(combo, dtype=float).reshape(model.L, 1, 1)
        pts.append(combo)
        member.append(check_set_S(model, weights, Ptilde).member)
    points = np.array(pts, dtype=float).reshape(len(pts), model.L)
    return RegionScan(points=points, member=np.array(member, dtype=bool))


def exact_observability(
    model: MjlsModel,
    Qsqrt: np.ndarray,
    T: int | None = None,
) -> ObservabilityReport:
    """Gramian test of exact observability for outputs y(k) = Qsqrt_{theta(k)} x(k).

    With Qt_i = Qsqrt_i^2, the recursion

        G_i(0)   = Qt_i
        G_i(t+1) = Qt_i + A_i' (sum_j rho[i,j] G_j(t)) A_i
                        + sigma2 B_i' (sum_j rho[i,j] G_j(t)) B_i

    gives x0' G_i(T) x0 = E[sum_{k<=T} |y(k)|^2 | x0, theta(0)=i].  The pair
    is declared observable iff every G_i(T) is positive definite; the default
    horizon is T = n * L, and theta(0) ranges over all modes.
    """
    L, n = model.L, model.n
    Qsqrt = np.asarray(Qsqrt, dtype=float)
    if Qsqrt.shape != (L, n, n):
        raise ValueError(f"Qsqrt: expected shape {(L, n, n)}, got {Qsqrt.shape}")
    if T is None:
        T = n * L
    Qt = np.stack([Qsqrt[i] @ Qsqrt[i] for i in range(L)])
    G = Qt.copy()
    s2 = model.sigma2
    for _ in range(T):
        S = coupled_sum(model.rho, G)
        nxt = np.empty_like(G)
        for i in range(L):
            A, B = model.A[i], model.B[i]
            g = Qt[i] + A.T @ S[i] @ A + s2 * (B.T @ S[i] @ B)
            nxt[i] = 0.5 * (g + g.T)
        G = nxt
    lam = np.array([float(np.min(np.linalg.eigvalsh(G[i]))) for i in range(L)])
    observable = all(psd_check(G[i]) is Definiteness.POSITIVE_DEFINITE for i in range(L))
    return ObservabilityReport(observable=observable, gramians=G, lambda_min=lam, horizon=T)


def second_moment_map(model: MjlsModel, Abar: np.ndarray, Bbar: np.ndarray):
    """Closed-loop second-moment operator on stacked mode-conditioned moments.

    Maps (Z_1..Z_L) to Z'_j = sum_i rho[i,j] (Abar_i Z_i Abar_i' +
    sigma2 Bbar_i Z_i Bbar_i'), the one-step propagation of
    E[x x' 1{theta=i}].
    """
    rho = model.rho
    s2 = model.sigma2
    L = model.L

    def apply(Z):
        out = []
        for j in range(L):
            acc = np.zeros_like(np.asarray(Z[0], dtype=float))
            for i in range(L):
                Zi = np.asarray(Z[i], dtype=float)
                acc = acc + rho[i, j] * (Abar[i] @ Zi @ Abar[i].T + s2 * (Bbar[i] @ Zi @ Bbar[i].T))
            out.append(acc)
        return out

    return apply


def ms_stability(model: MjlsModel, F: np.ndarray, margin: float = STABILITY_MARGIN) -> StabilityCertificate:
    """Certify mean-square stability of the loop closed by per-mode gains F.

    Forms Abar_i = A_i + C_i F_i and Bbar_i = B_i + D_i F_i and returns the
    spectral radius of their second-moment operator; radius < 1 - margin
    means E[x(k)'x(k)] -> 0 for every initial state and mode.
    """
    L, n, m = model.L, model.n, model.m
    F = np.asarray(F, dtype=float)
    if F.shape != (L, m, n):
        raise ValueError(f"F: expected shape {(L, m, n)}, got {F.shape}")
    Abar = np.stack([model.A[i] + model.C[i] @ F[i] for i in range(L)])
    Bbar = np.stack([model.B[i] + model.D[i] @ F[i] for i in range(L)])
    radius = tuple_operator_spectral_radius(second_moment_map(model, Abar, Bbar), L, n)
    return StabilityCertificate(
        spectral_radius=radius,
        stable=radius < 1.0 - margin,
        closed_loop_A=Abar,
        closed_loop_B=Bbar,
        margin=margin,
    )


def maximality_check(
    P: np.ndarray,
    candidates: list[np.ndarray],
    tol: float = 1e-8,
) -> tuple[bool, float]:
    """Check P_i - Ptilde_i >= -tol I for every candidate shift.

    Returns the verdict and the most negative eigenvalue encountered
    (0 when there is none).
    """
    P = np.asarray(P, dtype=float)
    worst = 0.0
    for cand in candidates:
        cand = np.asarray(cand, dtype=float)
        for i in range(P.shape[0]):
            lam = float(np.min(np.linalg.eigvalsh(P[i] - cand[i])))
            worst = min(worst, lam)
    return worst >= -tol, worst
