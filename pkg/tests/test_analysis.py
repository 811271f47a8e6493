import numpy as np
import pytest

from mjlq.analysis import (
    check_set_S,
    exact_observability,
    maximality_check,
    ms_stability,
    region_scan,
)
from mjlq.model import CostWeights, InitialState, MjlsModel
from mjlq.numlin import Definiteness, pinv_sym, psd_check
from mjlq.riccati import shifted_weights, solve_gare
from mjlq.simulate import SimConfig, simulate

from conftest import two_mode_model


class TestCheckSetS:
    def test_interior_member(self, model, weights, ptilde):
        report = check_set_S(model, weights, ptilde)
        assert report.member
        assert report.failing_modes == ()
        assert np.all(report.block_lambda_min > 0.0)
        assert np.all(report.kernel_defects == 0.0)

    def test_non_member_block(self, model, weights):
        report = check_set_S(model, weights, np.array([[[0.0]], [[10.0]]]))
        assert not report.member
        assert 0 in report.failing_modes
        assert report.reasons[report.failing_modes.index(0)] == "block indefinite"

    def test_definite_zero_shift(self, model):
        weights = CostWeights(Q=[[[1.0]], [[2.0]]], R=[[[1.0]], [[1.0]]],
                              terminalP=np.zeros((2, 1, 1)))
        assert check_set_S(model, weights, np.zeros((2, 1, 1))).member

    def test_kernel_inclusion_failure(self):
        # R = 0 with C nonzero: kernel of the shifted input weight is everything
        model = MjlsModel(
            L=1, n=1, m=1, A=[[[0.5]]], B=[[[0.0]]], C=[[[1.0]]], D=[[[0.0]]],
            sigma2=0.0, rho=[[1.0]], pi0=[1.0],
        )
        weights = CostWeights(Q=[[[1.0]]], R=[[[0.0]]], terminalP=[[[0.0]]])
        report = check_set_S(model, weights, np.zeros((1, 1, 1)))
        assert not report.member
        assert report.reasons == ("kernel inclusion failed",)
        assert report.kernel_defects[0] == pytest.approx(1.0)

    def test_member_shifts_satisfy_schur_consequences(self, model, weights):
        for p1, p2 in [(-10.0, 19.0), (-15.0, 15.0), (-10.0, 20.0)]:
            sh = np.array([[[p1]], [[p2]]])
            if not check_set_S(model, weights, sh).member:
                continue
            sw = shifted_weights(model, weights, sh)
            for i in range(model.L):
                scale = max(1.0, np.max(np.abs(sw.Rt[i])), np.max(np.abs(sw.Qt[i])))
                assert psd_check(sw.Rt[i]) is not Definiteness.INDEFINITE
                schur = sw.Qt[i] - sw.Lt[i].T @ pinv_sym(sw.Rt[i]) @ sw.Lt[i]
                assert np.min(np.linalg.eigvalsh(schur)) >= -1e-8 * scale
                orth = sw.Lt[i].T @ (np.eye(model.m) - sw.Rt[i] @ pinv_sym(sw.Rt[i]))
                assert np.max(np.abs(orth)) <= 1e-8 * scale


def _condition_block(M, N, R):
    block = np.block([[M, N], [N.T, R]])
    return float(np.min(np.linalg.eigvalsh(0.5 * (block + block.T))))


def _condition_direct(M, N, R):
    Rp = pinv_sym(R)
    scale = max(1.0, np.max(np.abs(M)), np.max(np.abs(N)), np.max(np.abs(R)))
    psd = psd_check(R) is not Definiteness.INDEFINITE
    kernel = float(np.max(np.abs(N @ (np.eye(R.shape[0]) - R @ Rp)))) <= 1e-8 * scale
    schur = float(np.min(np.linalg.eigvalsh(M - N @ Rp @ N.T))) >= -1e-8 * scale
    return psd and kernel and schur


class TestExtendedSchurEquivalence:
    """Both directions of the block-PSD <-> pseudo-inverse Schur equivalence."""

    def test_block_psd_implies_direct(self):
        rng = np.random.default_rng(7)
        n, m = 3, 2
        for k in range(200):
            rank = rng.integers(1, n + m + 1)
            G = rng.standard_normal((rank, n + m))
            W = G.T @ G
            assert _condition_direct(W[:n, :n], W[:n, n:], W[n:, n:])

    def test_direct_implies_block_psd(self):
        rng = np.random.default_rng(8)
        n, m = 3, 2
        for k in range(200):
            rank = rng.integers(0, m + 1)
            H = rng.standard_normal((rank, m))
            R = H.T @ H
            N = rng.standard_normal((n, m)) @ R @ pinv_sym(R)
            G = rng.standard_normal((n, n))
            M = N @ pinv_sym(R) @ N.T + G.T @ G
            M = 0.5 * (M + M.T)
            scale = max(1.0, np.max(np.abs(M)), np.max(np.abs(R)))
            assert _condition_block(M, N, R) >= -1e-8 * scale

    def test_violations_fail_both_ways(self):
        rng = np.random.default_rng(9)
        n, m = 3, 2
        for k in range(100):
            H = rng.standard_normal((1, m))  # rank-deficient R
            R = H.T @ H
            N = rng.standard_normal((n, m))  # generically violates the kernel condition
            M = np.eye(n) * 10.0
            scale = max(1.0, np.max(np.abs(M)), np.max(np.abs(N)), np.max(np.abs(R)))
            kernel_defect = np.max(np.abs(N @ (np.eye(m) - R @ pinv_sym(R))))
            if kernel_defect <= 1e-3 * scale:
                continue
            assert not _condition_direct(M, N, R)
            assert _condition_block(M, N, R) < -1e-8 * scale


class TestRegionScan:
    def test_fixture_region(self, model, weights):
        scan = region_scan(model, weights, [(-30.0, 10.0), (0.0, 25.0)], 0.5)
        assert scan.points.shape == (81 * 51, 2)
        lookup = {tuple(p): bool(m) for p, m in zip(scan.points, scan.member)}
        assert lookup[(-10.0, 19.0)]
        assert not lookup[(0.0, 10.0)]
        members = scan.points[scan.member]
        assert len(members) > 0
        assert np.all(members[:, 1] <= 20.0)

    def test_row_major_order(self, model, weights):
        scan = region_scan(model, weights, [(0.0, 1.0), (0.0, 1.0)], 1.0)
        assert np.array_equal(scan.points, [[0, 0], [0, 1], [1, 0], [1, 1]])

    def test_empty_grid(self, model, weights):
        scan = region_scan(model, weights, [(0.0, -1.0), (0.0, 1.0)], 0.5)
        assert scan.points.shape == (0, 2)

    def test_high_band_is_all_non_member(self, model, weights):
        scan = region_scan(model, weights, [(-30.0, 10.0), (20.5, 23.0)], 0.5)
        assert len(scan.member) > 0
        assert not np.any(scan.member)

    def test_vector_state_rejected(self):
        model = MjlsModel(
            L=1, n=2, m=1,
            A=np.zeros((1, 2, 2)), B=np.zeros((1, 2, 2)),
            C=np.zeros((1, 2, 1)), D=np.zeros((1, 2, 1)),
            sigma2=0.0, rho=[[1.0]], pi0=[1.0],
        )
        weights = CostWeights(Q=np.zeros((1, 2, 2)), R=np.zeros((1, 1, 1)),
                              terminalP=np.zeros((1, 2, 2)))
        with pytest.raises(ValueError, match="scalar-state"):
            region_scan(model, weights, [(0.0, 1.0)], 0.5)


class TestExactObservability:
    def test_positive_shifted_weights_observable_immediately(self, model, weights, ptilde):
        sw = shifted_weights(model, weights, ptilde)
        qsqrt = np.stack([np.sqrt(sw.Qt[i]) for i in range(2)])
        assert exact_observability(model, qsqrt, T=0).observable
        report = exact_observability(model, qsqrt)
        assert report.observable
        assert report.horizon == 2

    def test_zero_output_never_observable(self, model):
        report = exact_observability(model, np.zeros((2, 1, 1)))
        assert not report.observable
        assert np.all(report.lambda_min == 0.0)

    def test_swap_dynamics_expose_hidden_coordinate(self):
        A = np.array([[0.0, 1.0], [1.0, 0.0]])
        model = MjlsModel(
            L=2, n=2, m=1,
            A=[A, A], B=np.zeros((2, 2, 2)),
            C=np.zeros((2, 2, 1)), D=np.zeros((2, 2, 1)),
            sigma2=1.0, rho=[[0.5, 0.5], [0.5, 0.5]], pi0=[0.5, 0.5],
        )
        qsqrt = np.stack([np.diag([1.0, 0.0])] * 2)
        assert not exact_observability(model, qsqrt, T=0).observable
        assert exact_observability(model, qsqrt, T=1).observable


class TestMsStability:
    def test_closed_loop_radius_matches_scalar_form(self, model, weights, ptilde):
        sol = solve_gare(model, weights, ptilde)
        cert = ms_stability(model, sol.F)
        c = np.array([
            (model.A[i, 0, 0] + model.C[i, 0, 0] * sol.F[i, 0, 0]) ** 2
            + model.sigma2 * (model.B[i, 0, 0] + model.D[i, 0, 0] * sol.F[i, 0, 0]) ** 2
            for i in range(2)
        ])
        transfer = np.array([[0.2 * c[0], 0.4 * c[1]], [0.8 * c[0], 0.6 * c[1]]])
        expected = np.max(np.abs(np.linalg.eigvals(transfer)))
        assert cert.spectral_radius == pytest.approx(expected, abs=1e-10)
        assert cert.spectral_radius == pytest.approx(0.0466, abs=1e-3)
        assert cert.stable

    def test_unstable_open_loop(self):
        model = MjlsModel(
            L=1, n=1, m=1, A=[[[2.0]]], B=[[[0.0]]], C=[[[1.0]]], D=[[[0.0]]],
            sigma2=1.0, rho=[[1.0]], pi0=[1.0],
        )
        cert = ms_stability(model, np.zeros((1, 1, 1)))
        assert cert.spectral_radius == pytest.approx(4.0, abs=1e-10)
        assert not cert.stable

    def test_nilpotent_loop(self):
        model = MjlsModel(
            L=2, n=1, m=1, A=np.zeros((2, 1, 1)), B=np.zeros((2, 1, 1)),
            C=np.ones((2, 1, 1)), D=np.zeros((2, 1, 1)),
            sigma2=1.0, rho=[[0.5, 0.5], [0.5, 0.5]], pi0=[0.5, 0.5],
        )
        cert = ms_stability(model, np.zeros((2, 1, 1)))
        assert cert.spectral_radius == 0.0


class TestStabilityDecayAgreement:
    def test_stable_loop_decays(self, model, weights, ptilde):
        sol = solve_gare(model, weights, ptilde)
        cert = ms_stability(model, sol.F)
        assert cert.stable
        # mode mixing adds one transient step over the pure radius envelope
        k_star = int(np.ceil(np.log(0.01) / np.log(cert.spectral_radius + 0.05))) + 1
        cfg = SimConfig(paths=20_000, horizon=max(k_star, 4), seed=11,
                        x0=InitialState(x0=[1.0]), gains=sol.F, theta0=0)
        rep = simulate(model, cfg)
        bound = 0.01 * rep.second_moment[0] + 3.0 * rep.second_moment_stderr[k_star]
        assert rep.second_moment[k_star] < bound

    def test_unstable_loop_blows_up(self):
        model = MjlsModel(
            L=1, n=1, m=1, A=[[[2.0]]], B=[[[0.0]]], C=[[[1.0]]], D=[[[0.0]]],
            sigma2=1.0, rho=[[1.0]], pi0=[1.0],
        )
        cert = ms_stability(model, np.zeros((1, 1, 1)))
        assert cert.spectral_radius > 1.0
        cfg = SimConfig(paths=100, horizon=50, seed=3,
                        x0=InitialState(x0=[1.0]), gains=np.zeros((1, 1, 1)), theta0=0)
        rep = simulate(model, cfg)
        assert np.any(rep.second_moment > 10.0 * rep.second_moment[0])


class TestMaximality:
    def test_equality_holds_with_zero_margin(self):
        P = np.array([[[2.0]], [[3.0]]])
        ok, worst = maximality_check(P, [P])
        assert ok
        assert worst == 0.0

    def test_dominated_candidate(self, model, weights, ptilde):
        sol = solve_gare(model, weights, ptilde)
        ok, worst = maximality_check(sol.P, [ptilde])
        assert ok
        assert worst >= -1e-8

    def test_violation_is_quantified(self):
        P = np.array([[[2.0]], [[3.0]]])
        ok, worst = maximality_check(P, [P + 1.0])
        assert not ok
        assert worst == pytest.approx(-1.0)
