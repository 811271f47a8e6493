"""Kernel selection: compiled extension when available, pure Python otherwise.

Both backends implement the identical algorithm (see ``_pathsim_py`` for the
stream specification) and produce bit-identical results, so which one runs is
purely a speed question.  Set ``MJLQ_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pathsim_py

if os.environ.get("MJLQ_PURE_PYTHON"):
    _impl = _pathsim_py
    COMPILED = False
else:
    try:
        from . import _pathsim as _impl  # type: ignore[no-redef]
        COMPILED = True
    except ImportError:
        _impl = _pathsim_py
        COMPILED = False


def kernel_name() -> str:
    return "compiled" if COMPILED else "python"


def available_backends() -> dict:
    """All importable kernel implementations, keyed by name."""
    out = {"python": _pathsim_py}
    try:
        from . import _pathsim
        out["compiled"] = _pathsim
    except ImportError:
        pass
    return out


def run_paths(
    A: np.ndarray,
    B: np.ndarray,
    C: np.ndarray,
    D: np.ndarray,
    sigma2: float,
    noise_kind: int,
    rho: np.ndarray,
    pi0: np.ndarray,
    theta0: int,
    x0: np.ndarray,
    F: np.ndarray,
    paths: int,
    seed: int,
    Q: np.ndarray | None = None,
    R: np.ndarray | None = None,
    Pterm: np.ndarray | None = None,
    penalty: np.ndarray | None = None,
    impl=None,
) -> dict:
    """Allocate outputs and dispatch one batch of paths to a kernel.

    Parameters mirror the kernel contract: stacked per-mode system matrices,
    time-varying gains ``F`` of shape (T, L, m, n), ``theta0 = -1`` to sample
    the initial mode from ``pi0``.  Cost accumulation (stage weights plus
    terminal penalty at x(T)) is enabled by passing Q/R/Pterm together;
    ``penalty`` of shape (T, L, n, n) enables the per-step quadratic
    penalty accumulator.  Returns the raw accumulator dict.
    """
    if impl is None:
        impl = _impl
    L = len(pi0)
    n = len(x0)
    T, _, m, _ = F.shape

    use_cost = Q is not None
    if use_cost and (R is None or Pterm is None):
        raise ValueError("cost accumulation needs Q, R and Pterm together")
    use_penalty = penalty is not None

    cc = np.ascontiguousarray
    Qa = cc(Q, dtype=float) if use_cost else np.zeros((L, n, n))
    Ra = cc(R, dtype=float) if use_cost else np.zeros((L, m, m))
    Pa = cc(Pterm, dtype=float) if use_cost else np.zeros((L, n, n))
    Ga = cc(penalty, dtype=float) if use_penalty else np.zeros((1, L, n, n))
    if use_penalty and Ga.shape != (T, L, n, n):
        raise ValueError(f"penalty: expected shape {(T, L, n, n)}, got {Ga.shape}")

    sum_xx = np.zeros(T + 1)
    sumsq_xx = np.zeros(T + 1)
    occupancy = np.zeros((T + 1, L), dtype=np.int64)
    theta0_out = np.zeros(paths, dtype=np.int32)
    cost_out = np.zeros(paths)
    penalty_out = np.zeros(paths)

    impl.run_paths(
        cc(A, dtype=float), cc(B, dtype=float), cc(C, dtype=float), cc(D, dtype=float),
        float(np.sqrt(sigma2)), int(noise_kind),
        cc(rho, dtype=float), cc(pi0, dtype=float), int(theta0),
        cc(x0, dtype=float),
        cc(F, dtype=float),
        Qa, Ra, Pa, Ga,
        int(use_cost), int(use_penalty),
        int(paths), int(seed) & 0xFFFFFFFFFFFFFFFF,
        sum_xx, sumsq_xx, occupancy, theta0_out, cost_out, penalty_out,
    )
    return {
        "sum_xx": sum_xx,
        "sumsq_xx": sumsq_xx,
        "occupancy": occupancy,
        "theta0": theta0_out,
        "cost": cost_out if use_cost else None,
        "penalty": penalty_out if use_penalty else None,
    }
