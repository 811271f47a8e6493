"""Seeded Monte Carlo engine and small-instance exact oracles.

``simulate`` rolls out the controlled plant under mode-dependent (optionally
time-varying) linear feedback, estimating second-moment trajectories, mode
occupancies and realized quadratic costs.  ``empirical_cost_identity``
estimates both sides of the cost decomposition

    J_N = E[x0' P_{theta(0)}(0) x0] + sum_k E[(u + Ups^+ M x)' Ups (u + Ups^+ M x)]

on common random numbers.  ``brute_force_finite`` minimizes the exact
finite-horizon cost of scalar problems by deterministic moment propagation
plus grid-refined coordinate descent - an oracle with zero sampling error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .model import CostWeights, InitialState, MjlsModel
from .riccati import FiniteSolution

NOISE_CODES = {"gaussian": 0, "rademacher": 1}


@dataclass(frozen=True)
class SimConfig:
    """One Monte Carlo run: path count, horizon (number of steps), seed,
    deterministic initial state, initial mode (None samples from pi0,
    otherwise a 0-based index), and feedback gains of shape (L, m, n) or
    (T, L, m, n) with T >= horizon.

    Optional cost accounting: when ``weights`` is given the realized cost
    sum_k x'Q x + u'R u over k < horizon is accumulated, plus the terminal
    penalty ``weights.terminalP`` at x(horizon) when ``include_terminal``.
    """

    paths: int
    horizon: int
    seed: int
    x0: InitialState
    gains: np.ndarray
    theta0: int | None = None
    weights: CostWeights | None = None
    include_terminal: bool = True

    def __post_init__(self):
        if self.paths < 1 or self.horizon < 1:
            raise ValueError("paths and horizon must be >= 1")
        if self.x0.x0 is None:
            raise ValueError("the simulator needs a deterministic initial state")


@dataclass(frozen=True)
class SimulationReport:
    """Per-step estimates with standard errors (sample std / sqrt(paths))."""

    second_moment: np.ndarray          # (horizon+1,) estimates of E[x'x]
    second_moment_stderr: np.ndarray   # (horizon+1,)
    mode_occupancy: np.ndarray         # (horizon+1, L) frequencies
    empirical_cost: float | None
    empirical_cost_stderr: float | None
    paths_used: int


def _mean_stderr(total: float, total_sq: float, count: int) -> tuple[float, float]:
    mean = total / count
    if count < 2:
        return mean, 0.0
    var = max(0.0, (total_sq - count * mean * mean) / (count - 1))
    return mean, float(np.sqrt(var / count))


def _gain_schedule(gains: np.ndarray, T: int, L: int, m: int, n: int) -> np.ndarray:
    gains = np.asarray(gains, dtype=float)
    if gains.shape == (L, m, n):
        return np.ascontiguousarray(np.broadcast_to(gains, (T, L, m, n)))
    if gains.ndim == 4 and gains.shape[1:] == (L, m, n):
        if gains.shape[0] < T:
            raise ValueError(f"time-varying gains cover {gains.shape[0]} steps, horizon needs {T}")
        return np.ascontiguousarray(gains[:T])
    raise ValueError(f"gains: expected shape {(L, m, n)} or (T, {L}, {m}, {n}), got {gains.shape}")


def gains_from_finite(sol: FiniteSolution) -> np.ndarray:
    """Stack the per-step gains of a backward recursion into (N+1, L, m, n)."""
    return np.stack([step.F for step in sol.steps])


def _run(model: MjlsModel, cfg: SimConfig, penalty: np.ndarray | None = None,
         terminal_override: np.ndarray | None = None) -> dict:
    T = cfg.horizon
    F = _gain_schedule(cfg.gains, T, model.L, model.m, model.n)
    use_cost = cfg.weights is not None
    Pterm = None
    if use_cost:
        Pterm = terminal_override if terminal_override is not None else cfg.weights.terminalP
        if not cfg.include_terminal:
            Pterm = np.zeros_like(Pterm)
    return _backend.run_paths(
        model.A, model.B, model.C, model.D,
        model.sigma2, NOISE_CODES[model.noise_kind],
        model.rho, model.pi0,
        -1 if cfg.theta0 is None else int(cfg.theta0),
        cfg.x0.x0,
        F,
        cfg.paths, cfg.seed,
        Q=cfg.weights.Q if use_cost else None,
        R=cfg.weights.R if use_cost else None,
        Pterm=Pterm,
        penalty=penalty,
    )


def simulate(model: MjlsModel, cfg: SimConfig) -> SimulationReport:
    """Estimate E[x(k)'x(k)], mode occupancies and (optionally) realized cost.

    Reproducible by construction: the report depends only on the model and
    (seed, paths, horizon, gains), never on execution order - each path owns
    the substream derived from (seed, path index) documented in the kernel,
    and accumulation runs in path order.
    """
    raw = _run(model, cfg)
    P = cfg.paths
    mean = raw["sum_xx"] / P
    stderr = np.zeros_like(mean)
    if P >= 2:
        var = np.maximum(0.0, (raw["sumsq_xx"] - P * mean * mean) / (P - 1))
        stderr = np.sqrt(var / P)
    cost_mean = cost_stderr = None
    if raw["cost"] is not None:
        cost = raw["cost"]
        cost_mean, cost_stderr = _mean_stderr(float(np.sum(cost)), float(np.sum(cost * cost)), P)
    return SimulationReport(
        second_moment=mean,
        second_moment_stderr=stderr,
        mode_occupancy=raw["occupancy"] / P,
        empirical_cost=cost_mean,
        empirical_cost_stderr=cost_stderr,
        paths_used=P,
    )


@dataclass(frozen=True)
class CostIdentityReport:
    """Both sides of the completion-of-squares identity on shared paths."""

    lhs: float            # realized J_N estimate
    lhs_stderr: float
    rhs: float            # E[x0'P(0)x0] + penalty estimate
    rhs_stderr: float
    z_score: float        # of lhs - rhs, paired per path
    paths_used: int


def empirical_cost_identity(
    model: MjlsModel,
    weights: CostWeights,
    sol: FiniteSolution,
    arbitrary_gains: np.ndarray,
    cfg: SimConfig,
) -> CostIdentityReport:
    """Estimate both sides of the cost decomposition under arbitrary gains.

    The rollout applies ``arbitrary_gains`` (which may differ from the
    optimal ones); the penalty term is accumulated along the same sample
    paths with the recursion's curvature matrices, so the two sides share
    all randomness and the z-score of their difference is a sharp check.
    ``cfg.horizon`` must equal ``sol.horizon + 1`` (states x(0..N+1)).
    """
    if not sol.solvable:
        raise ValueError("cost identity requires a solvable recursion")
    T = sol.horizon + 1
    if cfg.horizon != T:
        raise ValueError(f"cfg.horizon must be {T} (= recursion horizon + 1), got {cfg.horizon}")
    L, n, m = model.L, model.n, model.m

    K = _gain_schedule(np.asarray(arbitrary_gains, dtype=float), T, L, m, n)
    G = np.empty((T, L, n, n))
    for k in range(T):
        step = sol.steps[k]
        for i in range(L):
            delta = K[k, i] - step.F[i]
            g = delta.T @ step.Upsilon[i] @ delta
            G[k, i] = 0.5 * (g + g.T)

    run_cfg = SimConfig(
        paths=cfg.paths, horizon=T, seed=cfg.seed, x0=cfg.x0, gains=K,
        theta0=cfg.theta0, weights=weights, include_terminal=True,
    )
    raw = _run(model, run_cfg, penalty=G, terminal_override=sol.terminal)

    P0 = sol.steps[0].P
    x0 = cfg.x0.x0
    head = np.array([float(x0 @ P0[i] @ x0) for i in range(L)])
    rhs = head[raw["theta0"]] + raw["penalty"]
    lhs = raw["cost"]
    Pn = cfg.paths

    lhs_mean, lhs_se = _mean_stderr(float(np.sum(lhs)), float(np.sum(lhs * lhs)), Pn)
    rhs_mean, rhs_se = _mean_stderr(float(np.sum(rhs)), float(np.sum(rhs * rhs)), Pn)
    d = lhs - rhs
    d_mean, d_se = _mean_stderr(float(np.sum(d)), float(np.sum(d * d)), Pn)
    z = 0.0 if d_se == 0.0 else d_mean / d_se
    return CostIdentityReport(
        lhs=lhs_mean, lhs_stderr=lhs_se, rhs=rhs_mean, rhs_stderr=rhs_se,
        z_score=z, paths_used=Pn,
    )


@dataclass(frozen=True)
class BruteForceResult:
    """Exact minimum of the scalar finite-horizon cost over feedback gains.

    ``gains[k, i]`` is the scalar gain for step k, mode i; coordinates with
    no reachable probability mass (or a flat objective) are listed in
    ``flat`` and left at zero.
    """

    value: float
    gains: np.ndarray      # (N+1, L)
    flat: tuple            # ((k, i), ...) coordinates the objective ignores


def brute_force_finite(
    model: MjlsModel,
    weights: CostWeights,
    N: int,
    x0: float,
    theta0: int,
) -> BruteForceResult:
    """Minimize the exact finite-horizon cost of a scalar problem by search.

    Only scalar state/input with at most 3 modes and N <= 2.  The cost of a
    gain table {f_i(k)} is evaluated exactly by propagating mode-conditioned
    second moments (only the noise variance enters - no sampling), then
    minimized by coordinate descent where each coordinate visit runs a dense
    grid of span +-10 refined below 1e-6 resolution.  Zero Monte Carlo
    error makes this oracle sharper than anything it is used to check.
    """
    if model.n != 1 or model.m != 1:
        raise ValueError("brute force oracle requires scalar state and input")
    if model.L > 3 or N > 2 or N < 0:
        raise ValueError("brute force oracle requires L <= 3 and 0 <= N <= 2")
    L = model.L
    a = model.A[:, 0, 0]
    b = model.B[:, 0, 0]
    c = model.C[:, 0, 0]
    d = model.D[:, 0, 0]
    q = weights.Q[:, 0, 0]
    r = weights.R[:, 0, 0]
    pterm = weights.terminalP[:, 0, 0]
    rho = model.rho
    s2 = model.sigma2

    def occupancy(f: np.ndarray) -> np.ndarray:
        # mass[k, i] = E[x(k)^2, theta(k)=i]
        mass = np.zeros((N + 2, L))
        mass[0, theta0] = x0 * x0
        for k in range(N + 1):
            gain = (a + c * f[k]) ** 2 + s2 * (b + d * f[k]) ** 2
            mass[k + 1] = rho.T @ (gain * mass[k])
        return mass

    def cost(f: np.ndarray) -> float:
        mass = occupancy(f)
        total = 0.0
        for k in range(N + 1):
            total += float(np.sum((q + r * f[k] ** 2) * mass[k]))
        total += float(np.sum(pterm * mass[N + 1]))
        return total

    f = np.zeros((N + 1, L))
    flat: set[tuple[int, int]] = set()
    span = 10.0
    for _ in range(200):
        moved = 0.0
        flat = set()  # refreshed every sweep; the last completed sweep stands
        for k in range(N + 1):
            mass_now = occupancy(f)
            for i in range(L):
                if mass_now[k, i] <= 1e-300:
                    flat.add((k, i))
                    continue
                center = f[k, i]
                lo, hi = center - span, center + span
                best_v = None
                best_c = center
                while True:
                    grid = np.linspace(lo, hi, 41)
                    vals = []
                    for cand in grid:
                        f[k, i] = cand
                        vals.append(cost(f))
                    vals = np.asarray(vals)
                    if best_v is None and float(vals.max() - vals.min()) <= 1e-14 * max(1.0, float(np.abs(vals).max())):
                        flat.add((k, i))
                        best_c = center
                        break
                    j = int(np.argmin(vals))
                    best_v, best_c = float(vals[j]), float(grid[j])
                    width = (hi - lo) / 40.0
                    if width <= 1e-7:
                        break
                    lo, hi = best_c - width, best_c + width
                f[k, i] = best_c
                moved = max(moved, abs(best_c - center))
        if moved < 1e-9:
            break
    return BruteForceResult(value=cost(f), gains=f, flat=tuple(sorted(flat)))
