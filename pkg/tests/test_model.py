import numpy as np
import pytest

from mjlq.model import CostWeights, InitialState, MjlsModel, validate_model

from conftest import two_mode_model, two_mode_weights


def test_canonical_instance_passes():
    report = validate_model(two_mode_model(), two_mode_weights())
    assert report.ok
    assert str(report) == "model ok"


def test_bad_transition_row_reported():
    model = MjlsModel(
        L=2, n=1, m=1,
        A=[[[1.0]], [[1.0]]], B=[[[0.0]], [[0.0]]],
        C=[[[1.0]], [[1.0]]], D=[[[0.0]], [[0.0]]],
        sigma2=0.0,
        rho=[[0.5, 0.6], [0.5, 0.5]],
        pi0=[0.5, 0.5],
    )
    report = validate_model(model, two_mode_weights())
    assert not report.ok
    assert any("row 1 sums to 1.1" in v for v in report.violations)


def test_asymmetric_weight_reported():
    weights = CostWeights(
        Q=[[[0.0, 1.0], [0.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]]],
        R=[[[1.0]], [[1.0]]],
        terminalP=[[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
    )
    model = MjlsModel(
        L=2, n=2, m=1,
        A=np.zeros((2, 2, 2)), B=np.zeros((2, 2, 2)),
        C=np.zeros((2, 2, 1)), D=np.zeros((2, 2, 1)),
        sigma2=1.0, rho=[[1.0, 0.0], [0.0, 1.0]], pi0=[1.0, 0.0],
    )
    report = validate_model(model, weights)
    assert any("Q_1 not symmetric" in v for v in report.violations)


def test_negative_sigma2_and_bad_pi0():
    model = MjlsModel(
        L=1, n=1, m=1,
        A=[[[1.0]]], B=[[[0.0]]], C=[[[1.0]]], D=[[[0.0]]],
        sigma2=-1.0, rho=[[1.0]], pi0=[0.7],
    )
    weights = CostWeights(Q=[[[1.0]]], R=[[[1.0]]], terminalP=[[[0.0]]])
    report = validate_model(model, weights)
    assert any("sigma2" in v for v in report.violations)
    assert any("pi0 sums" in v for v in report.violations)


def test_validation_is_pure(model, weights):
    before = model.rho.copy()
    validate_model(model, weights)
    validate_model(model, weights)
    assert np.array_equal(model.rho, before)


def test_model_arrays_are_immutable(model):
    with pytest.raises(ValueError):
        model.A[0, 0, 0] = 2.0
    with pytest.raises(ValueError):
        model.rho[0, 0] = 0.9


def test_dimension_mismatch_rejected_at_construction():
    with pytest.raises(ValueError, match="expected shape"):
        MjlsModel(
            L=2, n=2, m=1,
            A=np.zeros((2, 1, 1)), B=np.zeros((2, 2, 2)),
            C=np.zeros((2, 2, 1)), D=np.zeros((2, 2, 1)),
            sigma2=1.0, rho=np.eye(2), pi0=[1.0, 0.0],
        )


def test_unknown_noise_kind_rejected():
    with pytest.raises(ValueError, match="noise_kind"):
        two_mode_model(noise_kind="uniform")


class TestInitialState:
    def test_exactly_one_representation(self):
        with pytest.raises(ValueError):
            InitialState()
        with pytest.raises(ValueError):
            InitialState(x0=[1.0], second_moment=np.eye(1))

    def test_moment_of_deterministic_state(self):
        init = InitialState(x0=[2.0, -1.0])
        assert np.allclose(init.moment(), [[4.0, -2.0], [-2.0, 1.0]])

    def test_second_moment_must_be_psd(self):
        with pytest.raises(ValueError, match="semidefinite"):
            InitialState(second_moment=[[-1.0, 0.0], [0.0, 1.0]])
        init = InitialState(second_moment=[[2.0, 0.0], [0.0, 3.0]])
        assert np.allclose(init.moment(), np.diag([2.0, 3.0]))
