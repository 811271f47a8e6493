"""Coupled Riccati solvers for jump-linear quadratic control.

Three layers:

* ``gdre_step`` / ``solve_finite`` - the backward difference recursion whose
  per-step regularity (PSD curvature + pseudo-inverse consistency) decides
  finite-horizon solvability.  Irregular steps are recorded, never raised.
* ``shifted_weights`` / ``solve_ngare`` - the definite reformulation built
  from a feasible shift Ptilde: iterate the same recursion with shifted
  weights from a zero terminal until the fixed point is reached.  Iterates
  are checked for monotone growth and positive semidefiniteness.
* ``solve_gare`` - stationary solution P = X + Ptilde, stabilizing gains,
  and an independent residual certificate on the stationary equations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import CostWeights, InitialState, MjlsModel
from .numlin import Definiteness, pinv_sym, psd_check

REGULARITY_TOL = 1e-8
NGARE_TOL = 1e-11
NGARE_MAX_ITER = 100_000
DIVERGENCE_NORM = 1e100

REASON_INDEFINITE = "Upsilon indefinite"
REASON_REGULARITY = "regularity violated"


class NgareDivergenceError(RuntimeError):
    """The shifted fixed-point iteration did not converge.

    This is the expected signal when the plant is not mean-square
    stabilizable; ``norm_history`` keeps the trailing per-iterate norms.
    """

    def __init__(self, iterations: int, norm_history: list[float], reason: str):
        self.iterations = iterations
        self.norm_history = norm_history
        tail = ", ".join(f"{v:.6g}" for v in norm_history[-5:])
        super().__init__(f"{reason} after {iterations} iterations (recent |X| history: {tail})")


class ConsistencyError(RuntimeError):
    """A solution came back violating its own certificates."""


def coupled_sum(rho: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Mode-coupled averages S_i = sum_j rho[i, j] P_j for a stacked tuple P."""
    return np.einsum("ij,jab->iab", rho, P)


@dataclass(frozen=True)
class RiccatiStep:
    """One backward step: value matrices, curvature, gains, regularity flags."""

    P: np.ndarray          # (L, n, n) symmetric
    Upsilon: np.ndarray    # (L, m, m) symmetric curvature
    M: np.ndarray          # (L, m, n) cross term
    F: np.ndarray          # (L, m, n) gain, -pinv(Upsilon) @ M
    regular: np.ndarray    # (L,) bool
    reasons: tuple         # per-mode failure reason or None


@dataclass(frozen=True)
class FiniteSolution:
    """Backward recursion trace, steps[k] holding time k = 0..horizon."""

    steps: list[RiccatiStep]
    horizon: int
    terminal: np.ndarray
    solvable: bool
    failure_step: tuple[int, int, str] | None  # (k, mode index 0-based, reason)
    weights: CostWeights


def gdre_step(
    P_next: np.ndarray,
    model: MjlsModel,
    Q: np.ndarray,
    R: np.ndarray,
    L_cross: np.ndarray | None = None,
) -> RiccatiStep:
    """One backward step of the coupled difference recursion.

    Given the stacked next-step value matrices ``P_next``, forms per mode

        S_i   = sum_j rho[i,j] P_next_j
        Ups_i = C_i' S_i C_i + sigma2 D_i' S_i D_i + R_i
        M_i   = C_i' S_i A_i + sigma2 D_i' S_i B_i + L_i
        P_i   = A_i' S_i A_i + sigma2 B_i' S_i B_i + Q_i - M_i' Ups_i^+ M_i
        F_i   = -Ups_i^+ M_i

    with the optional cross weight ``L_cross`` (zero when absent).  Each mode
    is flagged regular iff Ups_i is PSD and Ups_i Ups_i^+ M_i = M_i; the step
    is returned either way.
    """
    L, n, m = model.L, model.n, model.m
    P_next = np.asarray(P_next, dtype=float)
    if P_next.shape != (L, n, n):
        raise ValueError(f"P_next: expected shape {(L, n, n)}, got {P_next.shape}")
    Q = np.asarray(Q, dtype=float)
    R = np.asarray(R, dtype=float)
    if Q.shape != (L, n, n) or R.shape != (L, m, m):
        raise ValueError("Q/R shapes do not match the model dimensions")
    if L_cross is not None:
        L_cross = np.asarray(L_cross, dtype=float)
        if L_cross.shape != (L, m, n):
            raise ValueError(f"L_cross: expected shape {(L, m, n)}, got {L_cross.shape}")

    S = coupled_sum(model.rho, P_next)
    s2 = model.sigma2

    P = np.empty((L, n, n))
    Ups = np.empty((L, m, m))
    M = np.empty((L, m, n))
    F = np.empty((L, m, n))
    regular = np.empty(L, dtype=bool)
    reasons: list[str | None] = []

    for i in range(L):
        A, B, C, D = model.A[i], model.B[i], model.C[i], model.D[i]
        Si = S[i]
        U = C.T @ Si @ C + s2 * (D.T @ Si @ D) + R[i]
        U = 0.5 * (U + U.T)
        Mi = C.T @ Si @ A + s2 * (D.T @ Si @ B)
        if L_cross is not None:
            Mi = Mi + L_cross[i]
        Upinv = pinv_sym(U)
        Fi = -(Upinv @ Mi)
        Pi = A.T @ Si @ A + s2 * (B.T @ Si @ B) + Q[i] - Mi.T @ Upinv @ Mi
        Pi = 0.5 * (Pi + Pi.T)

        psd_ok = psd_check(U) is not Definiteness.INDEFINITE
        defect = float(np.max(np.abs(U @ Upinv @ Mi - Mi))) if Mi.size else 0.0
        range_ok = defect <= REGULARITY_TOL * max(1.0, float(np.max(np.abs(Mi))) if Mi.size else 0.0)
        regular[i] = psd_ok and range_ok
        reasons.append(None if regular[i] else (REASON_INDEFINITE if not psd_ok else REASON_REGULARITY))

        P[i], Ups[i], M[i], F[i] = Pi, U, Mi, Fi

    return RiccatiStep(P=P, Upsilon=Ups, M=M, F=F, regular=regular, reasons=tuple(reasons))


def solve_finite(model: MjlsModel, weights: CostWeights, N: int) -> FiniteSolution:
    """Run the backward recursion from the terminal penalty down to time 0.

    Keeps every step.  ``solvable`` iff every (k, mode) is regular;
    ``failure_step`` points at the earliest time / lowest mode that is not.
    Irregularity is data, not an exception.
    """
    if N < 0:
        raise ValueError("horizon must be nonnegative")
    terminal = np.asarray(weights.terminalP, dtype=float)
    steps: list[RiccatiStep] = []
    P_next = terminal
    for _ in range(N + 1):
        step = gdre_step(P_next, model, weights.Q, weights.R)
        steps.append(step)
        P_next = step.P
    steps.reverse()

    failure = None
    for k, step in enumerate(steps):
        for i in range(model.L):
            if not step.regular[i]:
                failure = (k, i, step.reasons[i])
                break
        if failure:
            break
    return FiniteSolution(
        steps=steps,
        horizon=N,
        terminal=terminal,
        solvable=failure is None,
        failure_step=failure,
        weights=weights,
    )


def optimal_cost_finite(sol: FiniteSolution, init: InitialState, pi0: np.ndarray) -> float:
    """Optimal finite-horizon cost sum_i pi0_i tr(P_i(0) E[x0 x0'])."""
    if not sol.solvable:
        raise ValueError("finite recursion is not solvable; cost formula does not apply")
    X0 = init.moment()
    pi0 = np.asarray(pi0, dtype=float)
    return float(sum(pi0[i] * np.trace(sol.steps[0].P[i] @ X0) for i in range(len(pi0))))


def costate_residual(sol: FiniteSolution, model: MjlsModel) -> np.ndarray:
    """Stationarity and costate-recursion defects of a solvable recursion.

    Per step k the returned entry is the max over modes of

    * ``|M_i(k) + Ups_i(k) F_i(k)|``  (first-order condition along the gain),
    * the defect of ``P_i(k) = A'S A + sigma2 B'S B + Q + M' F``  (the value
      recursion rewritten through the gain).

    Both vanish identically for untampered solutions; perturbed gains show up
    at first order.
    """
    if not sol.solvable:
        raise ValueError("costate identities require a solvable recursion")
    L = model.L
    s2 = model.sigma2
    out = np.zeros(sol.horizon + 1)
    for k, step in enumerate(sol.steps):
        P_next = sol.steps[k + 1].P if k < sol.horizon else sol.terminal
        S = coupled_sum(model.rho, P_next)
        worst = 0.0
        for i in range(L):
            A, B = model.A[i], model.B[i]
            stat = float(np.max(np.abs(step.M[i] + step.Upsilon[i] @ step.F[i])))
            rebuilt = A.T @ S[i] @ A + s2 * (B.T @ S[i] @ B) + sol.weights.Q[i] + step.M[i].T @ step.F[i]
            costate = float(np.max(np.abs(step.P[i] - 0.5 * (rebuilt + rebuilt.T))))
            worst = max(worst, stat, costate)
        out[k] = worst
    return out


@dataclass(frozen=True)
class ShiftedWeights:
    """Definite-looking stage weights induced by a feasible shift Ptilde.

    With S_i = sum_j rho[i,j] Ptilde_j:

        Qt_i = A_i' S_i A_i + sigma2 B_i' S_i B_i + Q_i - Ptilde_i
        Lt_i = C_i' S_i A_i + sigma2 D_i' S_i B_i          (m x n)
        Rt_i = C_i' S_i C_i + sigma2 D_i' S_i D_i + R_i

    Feasibility of Ptilde (block PSD + kernel inclusion) is a property the
    analysis layer checks; nothing here assumes it.
    """

    Qt: np.ndarray  # (L, n, n)
    Lt: np.ndarray  # (L, m, n)
    Rt: np.ndarray  # (L, m, m)
    Ptilde: np.ndarray  # (L, n, n)


def shifted_weights(model: MjlsModel, weights: CostWeights, Ptilde: np.ndarray) -> ShiftedWeights:
    """Build the shifted stage weights for a symmetric per-mode shift."""
    L, n, m = model.L, model.n, model.m
    Ptilde = np.asarray(Ptilde, dtype=float)
    if Ptilde.shape != (L, n, n):
        raise ValueError(f"Ptilde: expected shape {(L, n, n)}, got {Ptilde.shape}")
    S = coupled_sum(model.rho, Ptilde)
    s2 = model.sigma2
    Qt = np.empty((L, n, n))
    Lt = np.empty((L, m, n))
    Rt = np.empty((L, m, m))
    for i in range(L):
        A, B, C, D = model.A[i], model.B[i], model.C[i], model.D[i]
        q = A.T @ S[i] @ A + s2 * (B.T @ S[i] @ B) + weights.Q[i] - Ptilde[i]
        r = C.T @ S[i] @ C + s2 * (D.T @ S[i] @ D) + weights.R[i]
        Qt[i] = 0.5 * (q + q.T)
        Rt[i] = 0.5 * (r + r.T)
        Lt[i] = C.T @ S[i] @ A + s2 * (D.T @ S[i] @ B)
    return ShiftedWeights(Qt=Qt, Lt=Lt, Rt=Rt, Ptilde=Ptilde)


@dataclass(frozen=True)
class NgareSolution:
    """Fixed point of the shifted recursion plus iteration diagnostics."""

    X: np.ndarray            # (L, n, n) PSD fixed point
    F: np.ndarray            # (L, m, n) gains at the fixed point
    iterations: int
    monotone_defect: float   # most negative eigenvalue seen in X_{t+1} - X_t (0 if clean)
    psd_defect: float        # most negative eigenvalue seen across iterates (0 if clean)
    regular: np.ndarray      # (L,) regularity flags of the final step


def solve_ngare(
    model: MjlsModel,
    sw: ShiftedWeights,
    tol: float = NGARE_TOL,
    max_iter: int = NGARE_MAX_ITER,
) -> NgareSolution:
    """Iterate the shifted recursion from X = 0 to its fixed point.

    Stops when ``max_i |X_i^{t+1} - X_i^t|_inf <= tol * max(1, |X^t|_inf)``.
    Raises :class:`NgareDivergenceError` on unbounded growth or when the
    iteration budget runs out - the expected outcome for plants that are not
    mean-square stabilizable.  Monotonicity and PSD-ness of the iterates are
    verified along the way and reported as worst-case defects (they are void
    when the shift is infeasible, not an error).
    """
    L, n = model.L, model.n
    X = np.zeros((L, n, n))
    norm_history: list[float] = []
    monotone_defect = 0.0
    psd_defect = 0.0
    for it in range(1, max_iter + 1):
        step = gdre_step(X, model, sw.Qt, sw.Rt, L_cross=sw.Lt)
        Xn = step.P
        if not np.all(np.isfinite(Xn)) or float(np.max(np.abs(Xn))) > DIVERGENCE_NORM:
            raise NgareDivergenceError(it, norm_history, "iterates grew without bound")
        norm_history.append(float(np.max(np.abs(Xn))))
        if len(norm_history) > 50:
            del norm_history[0]
        for i in range(L):
            lam_step = float(np.min(np.linalg.eigvalsh(Xn[i] - X[i])))
            monotone_defect = max(monotone_defect, -lam_step)
            lam_psd = float(np.min(np.linalg.eigvalsh(Xn[i])))
            psd_defect = max(psd_defect, -lam_psd)
        diff = float(np.max(np.abs(Xn - X)))
        scale = max(1.0, float(np.max(np.abs(X))))
        X = Xn
        if diff <= tol * scale:
            return NgareSolution(
                X=X,
                F=step.F,
                iterations=it,
                monotone_defect=monotone_defect,
                psd_defect=psd_defect,
                regular=step.regular,
            )
    raise NgareDivergenceError(max_iter, norm_history, "no convergence within the iteration budget")


@dataclass(frozen=True)
class StationarySolution:
    """Maximal stationary solution with gains and certificates."""

    P: np.ndarray            # (L, n, n)
    X: np.ndarray            # (L, n, n), P - Ptilde
    F: np.ndarray            # (L, m, n) stabilizing gains
    Upsilon: np.ndarray      # (L, m, m) stationary curvature
    M: np.ndarray            # (L, m, n) stationary cross term
    iterations: int
    residual: float          # max-over-modes relative stationary-equation defect
    x_definiteness: tuple    # per-mode Definiteness of X
    monotone_defect: float
    psd_defect: float


def solve_gare(
    model: MjlsModel,
    weights: CostWeights,
    Ptilde: np.ndarray,
    tol: float = NGARE_TOL,
    max_iter: int = NGARE_MAX_ITER,
) -> StationarySolution:
    """Maximal stationary solution via the shifted fixed-point construction.

    Runs ``shifted_weights`` + ``solve_ngare``, sets ``P = X + Ptilde``,
    recomputes the stationary curvature/cross terms and gains directly from
    P, and asserts the certificates: stationary-equation residual, per-mode
    regularity, agreement of the direct gains with the shifted-iteration
    gains, and X being PSD (definiteness per mode is reported; callers
    relying on strict positivity should require observability of the shifted
    weights first).

    The caller is responsible for Ptilde feasibility (see
    ``analysis.check_set_S``); with an infeasible shift the guarantees are
    void and this will typically surface as a divergence or consistency
    error.
    """
    L = model.L
    sw = shifted_weights(model, weights, Ptilde)
    ng = solve_ngare(model, sw, tol=tol, max_iter=max_iter)
    P = ng.X + sw.Ptilde

    S = coupled_sum(model.rho, P)
    s2 = model.sigma2
    n, m = model.n, model.m
    Ups = np.empty((L, m, m))
    M = np.empty((L, m, n))
    F = np.empty((L, m, n))
    residual = 0.0
    for i in range(L):
        A, B, C, D = model.A[i], model.B[i], model.C[i], model.D[i]
        U = C.T @ S[i] @ C + s2 * (D.T @ S[i] @ D) + weights.R[i]
        U = 0.5 * (U + U.T)
        Mi = C.T @ S[i] @ A + s2 * (D.T @ S[i] @ B)
        Upinv = pinv_sym(U)
        Fi = -(Upinv @ Mi)

        if psd_check(U) is Definiteness.INDEFINITE:
            raise ConsistencyError(f"stationary curvature of mode {i + 1} is indefinite")
        range_defect = float(np.max(np.abs(U @ Upinv @ Mi - Mi))) if Mi.size else 0.0
        if range_defect > REGULARITY_TOL * max(1.0, float(np.max(np.abs(Mi)))):
            raise ConsistencyError(
                f"stationary regularity violated in mode {i + 1} (defect {range_defect:.3g})"
            )

        rhs = A.T @ S[i] @ A + s2 * (B.T @ S[i] @ B) + weights.Q[i] - Mi.T @ Upinv @ Mi
        defect = float(np.max(np.abs(P[i] - 0.5 * (rhs + rhs.T))))
        residual = max(residual, defect / max(1.0, float(np.max(np.abs(P[i])))))
        Ups[i], M[i], F[i] = U, Mi, Fi

    if residual > 1e-8:
        raise ConsistencyError(f"stationary-equation residual {residual:.3g} exceeds 1e-8")
    gain_gap = float(np.max(np.abs(F - ng.F))) if F.size else 0.0
    if gain_gap > 1e-7 * max(1.0, float(np.max(np.abs(F))) if F.size else 0.0):
        raise ConsistencyError(f"direct gains disagree with shifted-iteration gains by {gain_gap:.3g}")

    x_def = []
    for i in range(L):
        d = psd_check(ng.X[i])
        if d is Definiteness.INDEFINITE:
            raise ConsistencyError(f"shifted fixed point X_{i + 1} is indefinite")
        x_def.append(d)

    return StationarySolution(
        P=P,
        X=ng.X,
        F=F,
        Upsilon=Ups,
        M=M,
        iterations=ng.iterations,
        residual=residual,
        x_definiteness=tuple(x_def),
        monotone_defect=ng.monotone_defect,
        psd_defect=ng.psd_defect,
    )


def stationary_cost(sol: StationarySolution, init: InitialState, pi0: np.ndarray) -> float:
    """Optimal infinite-horizon cost sum_i pi0_i tr(P_i E[x0 x0'])."""
    X0 = init.moment()
    pi0 = np.asarray(pi0, dtype=float)
    return float(sum(pi0[i] * np.trace(sol.P[i] @ X0) for i in range(len(pi0))))
