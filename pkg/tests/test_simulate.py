import numpy as np
import pytest

from mjlq.model import CostWeights, InitialState, MjlsModel
from mjlq.riccati import optimal_cost_finite, solve_finite, solve_gare
from mjlq.simulate import (
    SimConfig,
    brute_force_finite,
    empirical_cost_identity,
    gains_from_finite,
    simulate,
)

from conftest import two_mode_model, two_mode_weights


def single_mode(a=0.5, b=0.0, c=1.0, d=0.0, sigma2=0.0):
    return MjlsModel(
        L=1, n=1, m=1, A=[[[a]]], B=[[[b]]], C=[[[c]]], D=[[[d]]],
        sigma2=sigma2, rho=[[1.0]], pi0=[1.0],
    )


class TestSimulate:
    def test_reproducible_and_seed_sensitive(self, model, weights, ptilde):
        sol = solve_gare(model, weights, ptilde)
        cfg = dict(paths=2000, horizon=10, x0=InitialState(x0=[1.0]),
                   gains=sol.F, theta0=None, weights=weights)
        one = simulate(model, SimConfig(seed=42, **cfg))
        two = simulate(model, SimConfig(seed=42, **cfg))
        other = simulate(model, SimConfig(seed=43, **cfg))
        assert np.array_equal(one.second_moment, two.second_moment)
        assert np.array_equal(one.mode_occupancy, two.mode_occupancy)
        assert one.empirical_cost == two.empirical_cost
        assert not np.array_equal(one.second_moment, other.second_moment)

    def test_initial_second_moment_is_exact(self, model, weights):
        cfg = SimConfig(paths=77, horizon=3, seed=0, x0=InitialState(x0=[-1.5]),
                        gains=np.zeros((2, 1, 1)))
        rep = simulate(model, cfg)
        assert rep.second_moment[0] == 2.25
        assert rep.second_moment_stderr[0] == 0.0

    def test_uncontrolled_scalar_decay_is_exact(self):
        # deterministic dyadic system: every path identical, sums exact
        model = single_mode(a=0.5, sigma2=0.0)
        cfg = SimConfig(paths=64, horizon=20, seed=1, x0=InitialState(x0=[1.0]),
                        gains=np.zeros((1, 1, 1)))
        rep = simulate(model, cfg)
        assert np.array_equal(rep.second_moment, 0.25 ** np.arange(21))
        assert np.all(rep.second_moment_stderr == 0.0)

    def test_deadbeat_mode_zeroes_state_on_every_path(self, model, weights, ptilde):
        # in the second mode the gain -1 cancels state and noise entries alike
        sol = solve_gare(model, weights, ptilde)
        cfg = SimConfig(paths=500, horizon=5, seed=9, x0=InitialState(x0=[1.0]),
                        gains=sol.F, theta0=1)
        rep = simulate(model, cfg)
        assert np.all(rep.second_moment[1:] == 0.0)
        assert np.all(rep.second_moment_stderr[1:] == 0.0)

    def test_rademacher_variance_is_exact_pathwise(self):
        # x(1) = w with |w| = sigma: the second moment estimate has no noise
        model = MjlsModel(
            L=1, n=1, m=1, A=[[[0.0]]], B=[[[1.0]]], C=[[[0.0]]], D=[[[0.0]]],
            sigma2=2.0, rho=[[1.0]], pi0=[1.0], noise_kind="rademacher",
        )
        cfg = SimConfig(paths=128, horizon=1, seed=5, x0=InitialState(x0=[1.0]),
                        gains=np.zeros((1, 1, 1)))
        rep = simulate(model, cfg)
        assert rep.second_moment[1] == pytest.approx(2.0, abs=1e-12)

    def test_gaussian_noise_variance(self):
        model = MjlsModel(
            L=1, n=1, m=1, A=[[[0.0]]], B=[[[1.0]]], C=[[[0.0]]], D=[[[0.0]]],
            sigma2=2.0, rho=[[1.0]], pi0=[1.0],
        )
        cfg = SimConfig(paths=100_000, horizon=1, seed=17, x0=InitialState(x0=[1.0]),
                        gains=np.zeros((1, 1, 1)))
        rep = simulate(model, cfg)
        assert abs(rep.second_moment[1] - 2.0) < 0.05 * 2.0

    def test_noise_kinds_agree_on_second_moments(self, weights, ptilde):
        reports = {}
        for kind in ("gaussian", "rademacher"):
            model = two_mode_model(noise_kind=kind)
            sol = solve_gare(model, weights, ptilde)
            cfg = SimConfig(paths=40_000, horizon=6, seed=3, x0=InitialState(x0=[1.0]),
                            gains=sol.F, theta0=0)
            reports[kind] = simulate(model, cfg)
        a, b = reports["gaussian"], reports["rademacher"]
        joint = np.sqrt(a.second_moment_stderr ** 2 + b.second_moment_stderr ** 2)
        assert np.all(np.abs(a.second_moment - b.second_moment) <= 4.0 * joint + 1e-12)

    def test_sampled_initial_mode_matches_pi0(self, model, weights):
        cfg = SimConfig(paths=50_000, horizon=1, seed=12, x0=InitialState(x0=[1.0]),
                        gains=np.zeros((2, 1, 1)))
        rep = simulate(model, cfg)
        assert np.allclose(rep.mode_occupancy[0], model.pi0, atol=0.01)

    def test_running_cost_for_dead_plant(self):
        # A = B = 0 with zero gains: only the k = 0 stage cost survives
        model = MjlsModel(
            L=1, n=1, m=1, A=[[[0.0]]], B=[[[0.0]]], C=[[[1.0]]], D=[[[0.0]]],
            sigma2=1.0, rho=[[1.0]], pi0=[1.0],
        )
        weights = CostWeights(Q=[[[3.0]]], R=[[[1.0]]], terminalP=[[[5.0]]])
        cfg = SimConfig(paths=16, horizon=4, seed=2, x0=InitialState(x0=[2.0]),
                        gains=np.zeros((1, 1, 1)), weights=weights, include_terminal=True)
        rep = simulate(model, cfg)
        assert rep.empirical_cost == pytest.approx(12.0, abs=1e-12)

    def test_random_initial_state_rejected(self):
        with pytest.raises(ValueError, match="deterministic"):
            SimConfig(paths=1, horizon=1, seed=0,
                      x0=InitialState(second_moment=np.eye(1)),
                      gains=np.zeros((1, 1, 1)))

    def test_short_gain_schedule_rejected(self, model):
        cfg = SimConfig(paths=1, horizon=5, seed=0, x0=InitialState(x0=[1.0]),
                        gains=np.zeros((3, 2, 1, 1)))
        with pytest.raises(ValueError, match="cover"):
            simulate(model, cfg)


class TestCostIdentity:
    def test_optimal_gains_close_identity(self, model, weights):
        sol = solve_finite(model, weights, 8)
        cfg = SimConfig(paths=20_000, horizon=9, seed=21, x0=InitialState(x0=[1.0]),
                        gains=gains_from_finite(sol), weights=weights)
        rep = empirical_cost_identity(model, weights, sol, gains_from_finite(sol), cfg)
        assert abs(rep.z_score) <= 3.0
        expected = optimal_cost_finite(sol, InitialState(x0=[1.0]), model.pi0)
        assert abs(rep.lhs - expected) <= 3.0 * rep.lhs_stderr

    def test_perturbed_gains_pay_a_premium(self, model, weights):
        sol = solve_finite(model, weights, 8)
        worse = gains_from_finite(sol) + 0.5
        cfg = SimConfig(paths=20_000, horizon=9, seed=22, x0=InitialState(x0=[1.0]),
                        gains=worse, weights=weights)
        rep = empirical_cost_identity(model, weights, sol, worse, cfg)
        assert abs(rep.z_score) <= 4.0
        optimal = optimal_cost_finite(sol, InitialState(x0=[1.0]), model.pi0)
        assert rep.lhs - optimal >= 3.0 * rep.lhs_stderr

    def test_zero_problem_is_degenerate(self, model):
        weights = CostWeights(Q=np.zeros((2, 1, 1)), R=np.zeros((2, 1, 1)),
                              terminalP=np.zeros((2, 1, 1)))
        sol = solve_finite(model, weights, 3)
        cfg = SimConfig(paths=256, horizon=4, seed=1, x0=InitialState(x0=[1.0]),
                        gains=np.zeros((2, 1, 1)), weights=weights)
        rep = empirical_cost_identity(model, weights, sol, np.zeros((2, 1, 1)), cfg)
        assert rep.lhs == 0.0
        assert rep.rhs == 0.0
        assert rep.z_score == 0.0

    def test_horizon_mismatch_rejected(self, model, weights):
        sol = solve_finite(model, weights, 8)
        cfg = SimConfig(paths=10, horizon=5, seed=0, x0=InitialState(x0=[1.0]),
                        gains=gains_from_finite(sol), weights=weights)
        with pytest.raises(ValueError, match="horizon"):
            empirical_cost_identity(model, weights, sol, gains_from_finite(sol), cfg)


class TestBruteForce:
    def test_matches_backward_recursion(self, model, weights):
        sol = solve_finite(model, weights, 1)
        result = brute_force_finite(model, weights, N=1, x0=1.0, theta0=0)
        expected = optimal_cost_finite(sol, InitialState(x0=[1.0]), [1.0, 0.0])
        assert abs(result.value - expected) <= 1e-5
        # gains must agree wherever probability mass reaches
        assert abs(result.gains[0, 0] - sol.steps[0].F[0, 0, 0]) <= 1e-4
        for i in range(2):
            assert abs(result.gains[1, i] - sol.steps[1].F[i, 0, 0]) <= 1e-4
        # mode 2 carries no mass at k = 0 when starting in mode 1
        assert (0, 1) in result.flat

    def test_zero_problem_reports_flat_objective(self, model):
        weights = CostWeights(Q=np.zeros((2, 1, 1)), R=np.zeros((2, 1, 1)),
                              terminalP=np.zeros((2, 1, 1)))
        result = brute_force_finite(model, weights, N=1, x0=1.0, theta0=0)
        assert result.value == 0.0
        assert len(result.flat) == 4

    def test_classical_one_step_formula(self):
        # sigma2 = 0, single mode, N = 0: argmin is -(c p a) / (c^2 p + r)
        a, c, p, r, q = 1.2, 1.0, 2.0, 1.0, 0.5
        model = single_mode(a=a, c=c)
        weights = CostWeights(Q=[[[q]]], R=[[[r]]], terminalP=[[[p]]])
        result = brute_force_finite(model, weights, N=0, x0=1.0, theta0=0)
        assert result.gains[0, 0] == pytest.approx(-(c * p * a) / (c * c * p + r), abs=1e-5)

    def test_unsupported_dimensions_rejected(self):
        model = MjlsModel(
            L=1, n=2, m=1, A=np.zeros((1, 2, 2)), B=np.zeros((1, 2, 2)),
            C=np.zeros((1, 2, 1)), D=np.zeros((1, 2, 1)),
            sigma2=0.0, rho=[[1.0]], pi0=[1.0],
        )
        weights = CostWeights(Q=np.zeros((1, 2, 2)), R=np.zeros((1, 1, 1)),
                              terminalP=np.zeros((1, 2, 2)))
        with pytest.raises(ValueError, match="scalar"):
            brute_force_finite(model, weights, N=1, x0=1.0, theta0=0)
        with pytest.raises(ValueError, match="N <= 2"):
            brute_force_finite(single_mode(), two_mode_weights(), N=3, x0=1.0, theta0=0)
