"""Command-line front end.

One problem file carries the full instance (see ``mjlq.problemfile``); every
subcommand takes that file plus flags and prints a report, optionally writing
machine-readable CSV.  Mode indices are 1-based in all output and flags.

Exit codes are a stable contract:

    0  success
    1  input error (unparsable file, failed validation, bad flags)
    2  finite-horizon recursion not solvable
    3  the shift is not in the feasible set
    4  exact-observability check failed
    5  stationary iteration diverged (not mean-square stabilizable under the
       tested certificate) or its consistency certificates failed
"""

from __future__ import annotations

import argparse
import re
import sys

import numpy as np

from . import analysis, problemfile, riccati
from .model import InitialState, validate_model
from .simulate import SimConfig, simulate as run_simulation
from .numlin import sqrt_psd
from .riccati import ConsistencyError, NgareDivergenceError

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_UNSOLVABLE = 2
EXIT_NOT_IN_S = 3
EXIT_NOT_OBSERVABLE = 4
EXIT_DIVERGED = 5


class CliInputError(ValueError):
    pass


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def _mat_str(M: np.ndarray) -> str:
    M = np.atleast_2d(M)
    rows = ["  ".join(_fmt(v) for v in row) for row in M]
    return "[" + "; ".join(rows) + "]"


def _parse_blocks(text: str, L: int, rows: int, cols: int, what: str) -> np.ndarray:
    """Parse ';'-separated per-mode blocks of row-major floats."""
    chunks = [c for c in text.split(";")]
    if len(chunks) != L:
        raise CliInputError(f"{what}: expected {L} ';'-separated mode blocks, got {len(chunks)}")
    out = np.empty((L, rows, cols))
    for i, chunk in enumerate(chunks):
        vals = [t for t in re.split(r"[,\s]+", chunk.strip()) if t]
        if len(vals) != rows * cols:
            raise CliInputError(f"{what}: mode {i + 1} needs {rows * cols} values, got {len(vals)}")
        try:
            out[i] = np.array([float(v) for v in vals]).reshape(rows, cols)
        except ValueError as exc:
            raise CliInputError(f"{what}: mode {i + 1}: {exc}") from None
    return out


def _load_problem(args) -> problemfile.Problem:
    try:
        prob = problemfile.load(args.file, symmetrize=args.symmetrize)
    except OSError as exc:
        raise CliInputError(f"cannot read {args.file}: {exc}") from None
    except problemfile.ProblemFileError as exc:
        raise CliInputError(str(exc)) from None
    report = validate_model(prob.model, prob.weights)
    if not report.ok:
        raise CliInputError("model validation failed:\n" + str(report))
    return prob


def _resolve_ptilde(prob: problemfile.Problem, args) -> np.ndarray:
    if getattr(args, "ptilde", None):
        return _parse_blocks(args.ptilde, prob.model.L, prob.model.n, prob.model.n, "--ptilde")
    if prob.ptilde is not None:
        return prob.ptilde
    raise CliInputError("no shift available: give --ptilde or a 'ptilde' file entry")


def _write_out(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_solve_finite(args) -> int:
    prob = _load_problem(args)
    weights = prob.weights
    if args.terminal:
        terminal = _parse_blocks(args.terminal, prob.model.L, prob.model.n, prob.model.n, "--terminal")
        weights = type(weights)(Q=weights.Q, R=weights.R, terminalP=terminal)
    sol = riccati.solve_finite(prob.model, weights, args.horizon)

    lines = [f"horizon: {args.horizon}", f"solvable: {str(sol.solvable).lower()}"]
    if not sol.solvable:
        k, i, reason = sol.failure_step
        lines.append(f"first failure: mode {i + 1}: {reason} at k={k}")
        text = "\n".join(lines)
        print(text)
        _write_out(args, text + "\n")
        return EXIT_UNSOLVABLE

    for k, step in enumerate(sol.steps):
        for i in range(prob.model.L):
            lines.append(
                f"k={k} mode {i + 1}: P = {_mat_str(step.P[i])}  F = {_mat_str(step.F[i])}"
            )
    if prob.x0 is not None:
        cost = riccati.optimal_cost_finite(sol, InitialState(x0=prob.x0), prob.model.pi0)
        lines.append(f"optimal cost: {_fmt(cost)}")
    text = "\n".join(lines)
    print(text)
    _write_out(args, text + "\n")
    return EXIT_OK


def _gare_pipeline(prob: problemfile.Problem, ptilde: np.ndarray, args, out_lines: list[str]):
    """Shared feasibility -> observability -> solve chain; returns (code, sol, cert)."""
    model, weights = prob.model, prob.weights
    force = getattr(args, "force", False)

    s_report = analysis.check_set_S(model, weights, ptilde)
    if not s_report.member:
        msgs = ", ".join(
            f"mode {i + 1} {reason}" for i, reason in zip(s_report.failing_modes, s_report.reasons)
        )
        out_lines.append(f"not in S: {msgs}")
        if not force:
            return EXIT_NOT_IN_S, None, None
        out_lines.append("continuing anyway (--force); results are uncertified")

    sw = riccati.shifted_weights(model, weights, ptilde)
    try:
        qsqrt = np.stack([sqrt_psd(sw.Qt[i]) for i in range(model.L)])
    except ValueError as exc:
        out_lines.append(f"observability check impossible: {exc}")
        if not force:
            return EXIT_NOT_OBSERVABLE, None, None
        qsqrt = None
    if qsqrt is not None:
        obs = analysis.exact_observability(model, qsqrt)
        if not obs.observable:
            out_lines.append(
                f"not exactly observable at T={obs.horizon} "
                f"(min Gramian eigenvalue {_fmt(float(np.min(obs.lambda_min)))})"
            )
            if not force:
                return EXIT_NOT_OBSERVABLE, None, None
            out_lines.append("continuing anyway (--force); results are uncertified")
        else:
            out_lines.append(f"exactly observable (T={obs.horizon})")

    try:
        sol = riccati.solve_gare(model, weights, ptilde, tol=args.tol)
    except NgareDivergenceError as exc:
        out_lines.append(f"not mean-square stabilizable under the tested certificate: {exc}")
        return EXIT_DIVERGED, None, None
    except ConsistencyError as exc:
        out_lines.append(f"solver consistency failure: {exc}")
        return EXIT_DIVERGED, None, None

    cert = analysis.ms_stability(model, sol.F)
    return EXIT_OK, sol, cert


def cmd_solve_gare(args) -> int:
    prob = _load_problem(args)
    ptilde = _resolve_ptilde(prob, args)
    lines: list[str] = []
    code, sol, cert = _gare_pipeline(prob, ptilde, args, lines)
    if code != EXIT_OK:
        text = "\n".join(lines)
        print(text)
        _write_out(args, text + "\n")
        return code

    for i in range(prob.model.L):
        lines.append(f"mode {i + 1}: P = {_mat_str(sol.P[i])}  F = {_mat_str(sol.F[i])}")
    lines.append(f"iterations: {sol.iterations}")
    lines.append(f"stationary residual (relative): {_fmt(sol.residual)}")
    lines.append(f"second-moment spectral radius: {_fmt(cert.spectral_radius)}")
    lines.append(f"mean-square stable: {str(cert.stable).lower()}")
    if prob.x0 is not None:
        cost = riccati.stationary_cost(sol, InitialState(x0=prob.x0), prob.model.pi0)
        lines.append(f"optimal cost: {_fmt(cost)}")
    text = "\n".join(lines)
    print(text)
    _write_out(args, text + "\n")
    return EXIT_OK


def cmd_check_s(args) -> int:
    prob = _load_problem(args)
    ptilde = _resolve_ptilde(prob, args)
    report = analysis.check_set_S(prob.model, prob.weights, ptilde)
    lines = [f"member: {str(report.member).lower()}"]
    for i in range(prob.model.L):
        lines.append(
            f"mode {i + 1}: block lambda_min = {_fmt(report.block_lambda_min[i])}, "
            f"kernel defect = {_fmt(report.kernel_defects[i])}"
        )
    for i, reason in zip(report.failing_modes, report.reasons):
        lines.append(f"mode {i + 1} fails: {reason}")
    print("\n".join(lines))
    return EXIT_OK


def cmd_region_scan(args) -> int:
    prob = _load_problem(args)
    L = prob.model.L
    if len(args.grid) != 2 * L:
        raise CliInputError(f"--grid needs {2 * L} numbers (lo hi per mode), got {len(args.grid)}")
    bounds = [(args.grid[2 * i], args.grid[2 * i + 1]) for i in range(L)]
    try:
        scan = analysis.region_scan(prob.model, prob.weights, bounds, args.step)
    except ValueError as exc:
        raise CliInputError(str(exc)) from None
    header = ",".join(f"ptilde_{i + 1}" for i in range(L)) + ",member"
    rows = [header]
    for pt, mem in zip(scan.points, scan.member):
        rows.append(",".join(repr(float(v)) for v in pt) + f",{int(mem)}")
    csv_text = "\n".join(rows) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
    else:
        sys.stdout.write(csv_text)
    print(f"grid points: {len(scan.member)}, members: {int(np.sum(scan.member))}", file=sys.stderr)
    return EXIT_OK


def cmd_observability(args) -> int:
    prob = _load_problem(args)
    ptilde = _resolve_ptilde(prob, args)
    sw = riccati.shifted_weights(prob.model, prob.weights, ptilde)
    try:
        qsqrt = np.stack([sqrt_psd(sw.Qt[i]) for i in range(prob.model.L)])
    except ValueError as exc:
        raise CliInputError(f"shifted state weight is indefinite: {exc}") from None
    report = analysis.exact_observability(prob.model, qsqrt, T=args.horizon)
    verdict = "observable" if report.observable else "not observable"
    print(f"{verdict} (T={report.horizon})")
    for i in range(prob.model.L):
        print(f"mode {i + 1}: Gramian lambda_min = {_fmt(report.lambda_min[i])}")
    return EXIT_OK


def _resolve_gains(prob: problemfile.Problem, args, lines: list[str]):
    """Gains from --gains: explicit per-mode blocks, or 'auto' via the solve pipeline."""
    model = prob.model
    if args.gains.strip() == "auto":
        ptilde = _resolve_ptilde(prob, args)
        code, sol, _ = _gare_pipeline(prob, ptilde, args, lines)
        if code != EXIT_OK:
            return code, None
        return EXIT_OK, sol.F
    return EXIT_OK, _parse_blocks(args.gains, model.L, model.m, model.n, "--gains")


def cmd_stability(args) -> int:
    prob = _load_problem(args)
    lines: list[str] = []
    code, gains = _resolve_gains(prob, args, lines)
    if code != EXIT_OK:
        print("\n".join(lines))
        return code
    cert = analysis.ms_stability(prob.model, gains)
    for line in lines:
        print(line)
    print(f"second-moment spectral radius: {_fmt(cert.spectral_radius)}")
    print(f"mean-square stable: {str(cert.stable).lower()}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    prob = _load_problem(args)
    lines: list[str] = []
    code, gains = _resolve_gains(prob, args, lines)
    if code != EXIT_OK:
        print("\n".join(lines))
        return code
    if prob.x0 is None:
        raise CliInputError("simulation needs an 'x0' entry in the problem file")
    theta0 = None if args.theta0 is None else args.theta0 - 1
    if theta0 is not None and not (0 <= theta0 < prob.model.L):
        raise CliInputError(f"--theta0 must be in 1..{prob.model.L}")
    cfg = SimConfig(
        paths=args.paths, horizon=args.horizon, seed=args.seed,
        x0=InitialState(x0=prob.x0), gains=gains, theta0=theta0,
        weights=prob.weights, include_terminal=False,
    )
    report = run_simulation(prob.model, cfg)

    header = "k,second_moment,stderr," + ",".join(
        f"occupancy_{i + 1}" for i in range(prob.model.L)
    )
    rows = [header]
    for k in range(args.horizon + 1):
        occ = ",".join(repr(float(v)) for v in report.mode_occupancy[k])
        rows.append(
            f"{k},{float(report.second_moment[k])!r},"
            f"{float(report.second_moment_stderr[k])!r},{occ}"
        )
    csv_text = "\n".join(rows) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
    else:
        sys.stdout.write(csv_text)

    for line in lines:
        print(line, file=sys.stderr)
    summary = (
        f"paths: {report.paths_used}, final E[x'x]: {_fmt(report.second_moment[-1])} "
        f"+- {_fmt(report.second_moment_stderr[-1])}"
    )
    if report.empirical_cost is not None:
        summary += (
            f", running cost: {_fmt(report.empirical_cost)} "
            f"+- {_fmt(report.empirical_cost_stderr)}"
        )
    print(summary, file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mjlq",
        description="Indefinite LQ control and mean-square stabilization of "
                    "Markov jump linear systems with multiplicative noise.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("file", help="problem file (YAML)")
        p.add_argument("--symmetrize", action="store_true",
                       help="average near-symmetric blocks (defect below 1e-8) on ingestion")

    p = sub.add_parser("solve-finite", help="backward recursion over a finite horizon")
    common(p)
    p.add_argument("--horizon", type=int, required=True, metavar="N")
    p.add_argument("--terminal", help="override terminal penalty: per-mode blocks 'a b ...; ...'")
    p.add_argument("--out", help="write the report to this path")
    p.set_defaults(func=cmd_solve_finite)

    p = sub.add_parser("solve-gare", help="stationary solution, gains and certificates")
    common(p)
    p.add_argument("--ptilde", help="shift: per-mode blocks 'a b ...; ...' (default: file entry)")
    p.add_argument("--tol", type=float, default=riccati.NGARE_TOL)
    p.add_argument("--force", action="store_true",
                   help="run even if feasibility/observability checks fail (uncertified)")
    p.add_argument("--out", help="write the report to this path")
    p.set_defaults(func=cmd_solve_gare)

    p = sub.add_parser("check-s", help="feasible-set membership of a shift")
    common(p)
    p.add_argument("--ptilde")
    p.set_defaults(func=cmd_check_s)

    p = sub.add_parser("region-scan", help="grid scan of feasible shifts (scalar state)")
    common(p)
    p.add_argument("--grid", type=float, nargs="+", required=True,
                   metavar="LO HI", help="lo hi per mode (2L numbers)")
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_region_scan)

    p = sub.add_parser("observability", help="exact observability of the shifted output pair")
    common(p)
    p.add_argument("--ptilde")
    p.add_argument("--horizon", type=int, default=None, metavar="T")
    p.set_defaults(func=cmd_observability)

    p = sub.add_parser("stability", help="second-moment spectral radius under given gains")
    common(p)
    p.add_argument("--gains", required=True,
                   help="'auto' or per-mode blocks 'a b ...; ...'")
    p.add_argument("--ptilde", help="shift for --gains auto")
    p.add_argument("--tol", type=float, default=riccati.NGARE_TOL)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("simulate", help="seeded Monte Carlo rollout, CSV trajectory")
    common(p)
    p.add_argument("--gains", required=True, help="'auto' or per-mode blocks")
    p.add_argument("--ptilde", help="shift for --gains auto")
    p.add_argument("--paths", type=int, default=10_000)
    p.add_argument("--horizon", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--theta0", type=int, default=None,
                   help="initial mode (1-based; default: sample from pi0)")
    p.add_argument("--tol", type=float, default=riccati.NGARE_TOL)
    p.add_argument("--force", action="store_true")
    p.add_argument("--out", help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
