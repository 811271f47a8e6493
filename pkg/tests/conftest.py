"""Shared fixtures: the canonical two-mode scalar instance and helpers."""

from pathlib import Path

import numpy as np
import pytest

from mjlq.model import CostWeights, MjlsModel

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"


def two_mode_model(noise_kind: str = "gaussian") -> MjlsModel:
    """Scalar two-mode plant with indefinite weights; feasible shifts form a
    bounded 2-D region with (-10, 19) in its interior."""
    return MjlsModel(
        L=2, n=1, m=1,
        A=[[[0.5]], [[0.25]]],
        B=[[[-0.5]], [[-0.25]]],
        C=[[[0.5]], [[0.25]]],
        D=[[[-0.5]], [[-0.25]]],
        sigma2=1.0,
        rho=[[0.2, 0.8], [0.4, 0.6]],
        pi0=[0.5, 0.5],
        noise_kind=noise_kind,
    )


def two_mode_weights(terminal: float = 20.0) -> CostWeights:
    return CostWeights(
        Q=[[[-1.0]], [[20.0]]],
        R=[[[-3.0]], [[0.0]]],
        terminalP=[[[terminal]], [[terminal]]],
    )


TWO_MODE_PTILDE = np.array([[[-10.0]], [[19.0]]])

# Larger root of the eliminated scalar fixed-point quadratic for the
# two-mode instance (mode 2 pins to 20 identically).
TWO_MODE_P1 = np.sqrt(439.0) - 27.0


@pytest.fixture
def model():
    return two_mode_model()


@pytest.fixture
def weights():
    return two_mode_weights()


@pytest.fixture
def ptilde():
    return TWO_MODE_PTILDE.copy()


@pytest.fixture
def fixture_file():
    return FIXTURE_DIR / "two_mode_indefinite.yaml"
