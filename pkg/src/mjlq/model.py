"""Problem data for jump-linear quadratic control.

A problem instance is a pair (MjlsModel, CostWeights): per-mode system
matrices driven by a finite Markov chain and scalar multiplicative noise,

    x(k+1) = (A_i + B_i w(k)) x(k) + (C_i + D_i w(k)) u(k),   i = theta(k),

plus per-mode symmetric (possibly indefinite) state/input weights and a
terminal penalty.  Everything downstream consumes validated instances only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SYMMETRY_TOL = 1e-12
STOCHASTIC_TOL = 1e-12

NOISE_KINDS = ("gaussian", "rademacher")


def _as_mode_stack(raw, L: int, rows: int, cols: int, name: str) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.shape != (L, rows, cols):
        raise ValueError(f"{name}: expected shape {(L, rows, cols)}, got {arr.shape}")
    return arr


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.flags.writeable = False
    return out


def symmetry_defect(mat: np.ndarray) -> float:
    """Max-abs asymmetry ``max|M - M'|`` of a square matrix."""
    return float(np.max(np.abs(mat - mat.T))) if mat.size else 0.0


@dataclass(frozen=True)
class MjlsModel:
    """Per-mode system data of the jump-linear plant.

    Attributes
    ----------
    L, n, m : int
        Mode count, state dimension, input dimension.
    A, B : (L, n, n) arrays
        State and state-noise matrices per mode.
    C, D : (L, n, m) arrays
        Input and input-noise matrices per mode.
    sigma2 : float
        Variance of the scalar white noise w(k) (zero mean).
    rho : (L, L) array
        Mode transition matrix, rho[i, j] = P(theta(k+1)=j | theta(k)=i).
    pi0 : (L,) array
        Initial mode distribution.
    noise_kind : str
        Sampling distribution of w(k) used by the simulator only
        ('gaussian' or 'rademacher'); the solvers use just sigma2.
    """

    L: int
    n: int
    m: int
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    sigma2: float
    rho: np.ndarray
    pi0: np.ndarray
    noise_kind: str = "gaussian"

    def __post_init__(self):
        L, n, m = self.L, self.n, self.m
        object.__setattr__(self, "A", _freeze(_as_mode_stack(self.A, L, n, n, "A")))
        object.__setattr__(self, "B", _freeze(_as_mode_stack(self.B, L, n, n, "B")))
        object.__setattr__(self, "C", _freeze(_as_mode_stack(self.C, L, n, m, "C")))
        object.__setattr__(self, "D", _freeze(_as_mode_stack(self.D, L, n, m, "D")))
        rho = np.asarray(self.rho, dtype=float)
        if rho.shape != (L, L):
            raise ValueError(f"rho: expected shape {(L, L)}, got {rho.shape}")
        object.__setattr__(self, "rho", _freeze(rho))
        pi0 = np.asarray(self.pi0, dtype=float)
        if pi0.shape != (L,):
            raise ValueError(f"pi0: expected shape {(L,)}, got {pi0.shape}")
        object.__setattr__(self, "pi0", _freeze(pi0))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        if self.noise_kind not in NOISE_KINDS:
            raise ValueError(f"noise_kind must be one of {NOISE_KINDS}, got {self.noise_kind!r}")


@dataclass(frozen=True)
class CostWeights:
    """Per-mode symmetric stage weights Q (state), R (input) and terminal penalty.

    Indefinite Q and R are allowed; only symmetry is required.
    """

    Q: np.ndarray
    R: np.ndarray
    terminalP: np.ndarray

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=float)
        R = np.asarray(self.R, dtype=float)
        P = np.asarray(self.terminalP, dtype=float)
        for name, arr in (("Q", Q), ("R", R), ("terminalP", P)):
            if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
                raise ValueError(f"{name}: expected (L, p, p) stack, got {arr.shape}")
        object.__setattr__(self, "Q", _freeze(Q))
        object.__setattr__(self, "R", _freeze(R))
        object.__setattr__(self, "terminalP", _freeze(P))


@dataclass(frozen=True)
class InitialState:
    """Deterministic initial state x0, or just its second moment E[x0 x0'].

    Exactly one of the two fields must be given.  The second-moment form is
    enough for the cost formulas; the simulator needs a deterministic x0.
    """

    x0: np.ndarray | None = None
    second_moment: np.ndarray | None = None

    def __post_init__(self):
        if (self.x0 is None) == (self.second_moment is None):
            raise ValueError("give exactly one of x0, second_moment")
        if self.x0 is not None:
            object.__setattr__(self, "x0", _freeze(np.atleast_1d(np.asarray(self.x0, dtype=float))))
        else:
            sm = np.asarray(self.second_moment, dtype=float)
            if sm.ndim != 2 or sm.shape[0] != sm.shape[1]:
                raise ValueError(f"second_moment must be square, got {sm.shape}")
            if symmetry_defect(sm) > 1e-10 * max(1.0, float(np.max(np.abs(sm)))):
                raise ValueError("second_moment is not symmetric")
            if float(np.min(np.linalg.eigvalsh(sm))) < -1e-10 * max(1.0, float(np.max(np.abs(sm)))):
                raise ValueError("second_moment is not positive semidefinite")
            object.__setattr__(self, "second_moment", _freeze(sm))

    def moment(self) -> np.ndarray:
        """The second moment E[x0 x0'] in either representation."""
        if self.x0 is not None:
            return np.outer(self.x0, self.x0)
        return self.second_moment


@dataclass
class ValidationReport:
    """Outcome of validate_model: empty violation list means the data is usable."""

    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "model ok"
        return "\n".join(self.violations)


def validate_model(model: MjlsModel, weights: CostWeights) -> ValidationReport:
    """Check every structural invariant of a problem instance.

    Violations are collected (with 1-based mode indices) rather than raised,
    so a caller can report all of them at once.  Deterministic and
    side-effect free.
    """
    bad: list[str] = []
    L, n, m = model.L, model.n, model.m

    for i in range(L):
        row = model.rho[i]
        s = float(np.sum(row))
        if abs(s - 1.0) > STOCHASTIC_TOL:
            bad.append(f"rho: row {i + 1} sums to {s:.12g}")
        if np.any(row < -STOCHASTIC_TOL) or np.any(row > 1.0 + STOCHASTIC_TOL):
            bad.append(f"rho: row {i + 1} has entries outside [0, 1]")
    s = float(np.sum(model.pi0))
    if abs(s - 1.0) > STOCHASTIC_TOL:
        bad.append(f"pi0 sums to {s:.12g}")
    if np.any(model.pi0 < -STOCHASTIC_TOL) or np.any(model.pi0 > 1.0 + STOCHASTIC_TOL):
        bad.append("pi0 has entries outside [0, 1]")

    if model.sigma2 < 0.0:
        bad.append(f"sigma2 is negative: {model.sigma2:.12g}")

    for name, arr, p in (("Q", weights.Q, n), ("R", weights.R, m), ("terminal_P", weights.terminalP, n)):
        if arr.shape != (L, p, p):
            bad.append(f"{name}: expected shape {(L, p, p)}, got {arr.shape}")
            continue
        for i in range(L):
            if symmetry_defect(arr[i]) > SYMMETRY_TOL:
                bad.append(f"{name}_{i + 1} not symmetric")

    return ValidationReport(bad)
