import numpy as np
import pytest

from ksbvp.boundary import BoundaryData
from ksbvp.grids import Grid1D, ModelParams, TimeGrid
from ksbvp.nonlinear import ConstantsCalibration

# measured once on the shipped calibration ensemble (seed 11, 4 samples)
# and frozen; recomputing in CI costs ~4 s and the values only move if
# the quadrature or the data families change
FROZEN_CALIB = {"c1": 6.9645, "c2": 0.3762, "c_energy": 2.9939,
                "ensemble": 4, "seed": 11}


@pytest.fixture(scope="session")
def grid256():
    return Grid1D(256, 30.0)


@pytest.fixture(scope="session")
def grid512():
    return Grid1D(512, 30.0)


@pytest.fixture(scope="session")
def params0():
    return ModelParams(delta=0.0, s=0.0, eps=0.0)


@pytest.fixture(scope="session")
def calib():
    return ConstantsCalibration.from_dict(FROZEN_CALIB)


@pytest.fixture
def zero_h():
    def make(T=0.25, steps=32):
        return BoundaryData.zero(TimeGrid(T, steps))
    return make


def l2_of(values, dx):
    return float(np.sqrt(np.trapezoid(np.abs(values) ** 2, dx=dx)))
