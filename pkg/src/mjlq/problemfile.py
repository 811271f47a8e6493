"""Problem-file ingestion and canonical serialization.

A problem file is a YAML document carrying one complete instance: dimensions,
noise, Markov chain, per-mode system matrices and weights, plus optional
terminal penalty, feasible shift and initial state::

    modes: 2
    state_dim: 1
    input_dim: 1
    sigma2: 1.0
    noise_kind: gaussian
    rho:
    - [0.2, 0.8]
    - [0.4, 0.6]
    pi0: [0.5, 0.5]
    A:           # one n x n block per mode; scalars and flat row-major
    - [[0.5]]    # lists of length n*n are accepted on input
    - [[0.25]]
    ...
    terminal_P:  # optional, zero when absent
    ptilde:      # optional
    x0:          # optional, length-n list

Matrices may be given nested (rows), flat row-major, or as bare scalars for
1 x 1 blocks; serialization always emits the nested canonical form with
full-precision floats, so ``parse(serialize(p)) == p`` bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import yaml

from .model import CostWeights, MjlsModel, symmetry_defect

SYMMETRIZE_LIMIT = 1e-8

_TOP_LEVEL_ORDER = (
    "modes", "state_dim", "input_dim", "sigma2", "noise_kind",
    "rho", "pi0", "A", "B", "C", "D", "Q", "R",
    "terminal_P", "ptilde", "x0",
)


class ProblemFileError(ValueError):
    """Malformed problem file; message carries the offending field."""


@dataclass(frozen=True)
class Problem:
    """Parsed problem file: model + weights + optional extras."""

    model: MjlsModel
    weights: CostWeights
    ptilde: np.ndarray | None
    x0: np.ndarray | None
    has_terminal: bool


def _field(doc: dict, key: str, kind, required: bool = True):
    if key not in doc:
        if required:
            raise ProblemFileError(f"{key}: missing required field")
        return None
    val = doc[key]
    if kind is float and isinstance(val, (int, float)) and not isinstance(val, bool):
        return float(val)
    if kind is int and isinstance(val, int) and not isinstance(val, bool):
        return val
    if kind is str and isinstance(val, str):
        return val
    if kind is list and isinstance(val, list):
        return val
    raise ProblemFileError(f"{key}: expected {kind.__name__}, got {type(val).__name__}")


def _matrix(raw, rows: int, cols: int, where: str) -> np.ndarray:
    """Accept scalar / flat row-major / nested rows; return (rows, cols)."""
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        if rows == cols == 1:
            return np.array([[float(raw)]])
        raise ProblemFileError(f"{where}: scalar given but a {rows}x{cols} matrix is needed")
    if not isinstance(raw, list):
        raise ProblemFileError(f"{where}: expected a matrix, got {type(raw).__name__}")
    if raw and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw):
        if len(raw) != rows * cols:
            raise ProblemFileError(f"{where}: flat matrix needs {rows * cols} entries, got {len(raw)}")
        return np.array(raw, dtype=float).reshape(rows, cols)
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ProblemFileError(f"{where}: not numeric ({exc})") from None
    if arr.shape != (rows, cols):
        raise ProblemFileError(f"{where}: expected shape {rows}x{cols}, got {'x'.join(map(str, arr.shape))}")
    return arr


def _mode_stack(doc: dict, key: str, L: int, rows: int, cols: int,
                required: bool = True) -> np.ndarray | None:
    raw = _field(doc, key, list, required=required)
    if raw is None:
        return None
    if len(raw) != L:
        raise ProblemFileError(f"{key}: expected {L} per-mode blocks, got {len(raw)}")
    return np.stack([_matrix(raw[i], rows, cols, f"{key}[mode {i + 1}]") for i in range(L)])


def _maybe_symmetrize(stack: np.ndarray, key: str, symmetrize: bool) -> np.ndarray:
    if not symmetrize:
        return stack
    out = stack.copy()
    for i in range(out.shape[0]):
        defect = symmetry_defect(out[i])
        if 0.0 < defect <= SYMMETRIZE_LIMIT:
            out[i] = 0.5 * (out[i] + out[i].T)
        elif defect > SYMMETRIZE_LIMIT:
            raise ProblemFileError(
                f"{key}[mode {i + 1}]: asymmetry {defect:.3g} too large to symmetrize"
            )
    return out


def parse(text: str, symmetrize: bool = False) -> Problem:
    """Parse a problem document.

    With ``symmetrize`` the symmetric blocks (Q, R, terminal_P, ptilde) are
    averaged with their transposes when the defect is below 1e-8; by default
    asymmetric data is rejected downstream by validation rather than
    silently repaired.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ProblemFileError(f"YAML parse error: {exc}") from None
    if not isinstance(doc, dict):
        raise ProblemFileError("problem file must be a mapping of fields")
    unknown = set(doc) - set(_TOP_LEVEL_ORDER)
    if unknown:
        raise ProblemFileError(f"unknown fields: {', '.join(sorted(unknown))}")

    L = _field(doc, "modes", int)
    n = _field(doc, "state_dim", int)
    m = _field(doc, "input_dim", int)
    if L < 1 or n < 1 or m < 1:
        raise ProblemFileError("modes, state_dim and input_dim must be positive")
    sigma2 = _field(doc, "sigma2", float)
    noise_kind = _field(doc, "noise_kind", str, required=False) or "gaussian"

    rho_raw = _field(doc, "rho", list)
    if len(rho_raw) != L:
        raise ProblemFileError(f"rho: expected {L} rows, got {len(rho_raw)}")
    rho = np.stack([_matrix(rho_raw[i], 1, L, f"rho[row {i + 1}]").ravel() for i in range(L)])

    pi0 = _matrix(_field(doc, "pi0", list), 1, L, "pi0").ravel()

    A = _mode_stack(doc, "A", L, n, n)
    B = _mode_stack(doc, "B", L, n, n)
    C = _mode_stack(doc, "C", L, n, m)
    D = _mode_stack(doc, "D", L, n, m)
    Q = _maybe_symmetrize(_mode_stack(doc, "Q", L, n, n), "Q", symmetrize)
    R = _maybe_symmetrize(_mode_stack(doc, "R", L, m, m), "R", symmetrize)

    terminal = _mode_stack(doc, "terminal_P", L, n, n, required=False)
    has_terminal = terminal is not None
    if terminal is None:
        terminal = np.zeros((L, n, n))
    else:
        terminal = _maybe_symmetrize(terminal, "terminal_P", symmetrize)

    ptilde = _mode_stack(doc, "ptilde", L, n, n, required=False)
    if ptilde is not None:
        ptilde = _maybe_symmetrize(ptilde, "ptilde", symmetrize)

    x0_raw = _field(doc, "x0", list, required=False)
    x0 = None
    if x0_raw is not None:
        x0 = _matrix(x0_raw, 1, n, "x0").ravel()

    try:
        model = MjlsModel(L=L, n=n, m=m, A=A, B=B, C=C, D=D,
                          sigma2=sigma2, rho=rho, pi0=pi0, noise_kind=noise_kind)
        weights = CostWeights(Q=Q, R=R, terminalP=terminal)
    except ValueError as exc:
        raise ProblemFileError(str(exc)) from None
    return Problem(model=model, weights=weights, ptilde=ptilde, x0=x0,
                   has_terminal=has_terminal)


def load(path, symmetrize: bool = False) -> Problem:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read(), symmetrize=symmetrize)


def _matrix_doc(mat: np.ndarray):
    return [[float(v) for v in row] for row in mat]


def serialize(problem: Problem) -> str:
    """Canonical YAML form; floats round-trip bit-exactly through repr."""
    model, weights = problem.model, problem.weights
    doc = {
        "modes": model.L,
        "state_dim": model.n,
        "input_dim": model.m,
        "sigma2": float(model.sigma2),
        "noise_kind": model.noise_kind,
        "rho": _matrix_doc(model.rho),
        "pi0": [float(v) for v in model.pi0],
        "A": [_matrix_doc(model.A[i]) for i in range(model.L)],
        "B": [_matrix_doc(model.B[i]) for i in range(model.L)],
        "C": [_matrix_doc(model.C[i]) for i in range(model.L)],
        "D": [_matrix_doc(model.D[i]) for i in range(model.L)],
        "Q": [_matrix_doc(weights.Q[i]) for i in range(model.L)],
        "R": [_matrix_doc(weights.R[i]) for i in range(model.L)],
    }
    if problem.has_terminal:
        doc["terminal_P"] = [_matrix_doc(weights.terminalP[i]) for i in range(model.L)]
    if problem.ptilde is not None:
        doc["ptilde"] = [_matrix_doc(problem.ptilde[i]) for i in range(model.L)]
    if problem.x0 is not None:
        doc["x0"] = [float(v) for v in problem.x0]
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)


def dump(problem: Problem, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(problem))
