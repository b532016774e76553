import warnings

import numpy as np
import pytest

from ksbvp.boundary import BoundaryData
from ksbvp.datafam import raised_cosine
from ksbvp.errors import AccuracyWarning, ConfigurationError
from ksbvp.fd_oracle import FDConfig, fd_compare, fd_solve
from ksbvp.grids import FieldSeries, Grid1D, ModelParams, TimeGrid
from ksbvp.spectral import symbol


def test_config_validation():
    assert FDConfig(L=30.0, nx=300).dx == pytest.approx(0.1)
    with pytest.raises(ConfigurationError):
        FDConfig(nx=32)
    with pytest.raises(ConfigurationError):
        FDConfig(L=-1.0)
    with pytest.raises(ConfigurationError):
        FDConfig(dt=0.0)
    with pytest.raises(ConfigurationError):
        FDConfig(scheme="rk4")


def test_zero_data_stays_zero(params0):
    tg = TimeGrid(0.25, 64)
    sol = fd_solve(lambda x: 0.0 * x, BoundaryData.zero(tg), params0,
                   FDConfig(L=30.0, nx=300, dt=1e-3))
    assert np.max(np.abs(sol.values)) == 0.0


def test_linear_march_matches_periodic_spectral_flow():
    # interior bump, short horizon: the clamped left edge and the far
    # truncation are both invisible, so a periodic Fourier evolution is
    # an independent reference for the linearized march
    params = ModelParams(0.5, 0.0, 0.0)
    tg = TimeGrid(0.25, 64)
    cfg = FDConfig(L=30.0, nx=600, dt=5e-4, include_nonlinear=False)
    phi = lambda x: np.exp(-((x - 15.0) ** 2))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        sol = fd_solve(phi, BoundaryData.zero(tg), params, cfg)
    line = Grid1D(1024, 30.0)
    lam = symbol(line, params.delta) + line.wavenumbers**2
    c0 = np.fft.fft(phi(line.nodes))
    rows = np.array([np.real(np.fft.ifft(c0 * np.exp(tau * lam))) for tau in sol.tgrid.nodes])
    rep = fd_compare(sol, FieldSeries(line, sol.tgrid, rows))
    assert rep.ratio < 1e-3  # measured 2.7e-4 at this resolution


def test_self_comparison_is_exact(params0):
    tg = TimeGrid(0.1, 32)
    sol = fd_solve(lambda x: 0.1 * np.exp(-((x - 10.0) ** 2)), BoundaryData.zero(tg),
                   params0, FDConfig(L=30.0, nx=200, dt=1e-3))
    rep = fd_compare(sol, sol)
    assert rep.lhs == 0.0


def test_second_order_space_convergence(params0):
    # errors against the finest run scale like 15u : 3u for dx^2, a 5x drop
    tg = TimeGrid(0.25, 64)
    h = BoundaryData.zero(tg)
    phi = lambda x: 0.3 * np.exp(-((x - 12.0) ** 2))
    runs = {
        nx: fd_solve(phi, h, params0, FDConfig(L=30.0, nx=nx, dt=2.5e-4))
        for nx in (150, 300, 600)
    }
    e1 = fd_compare(runs[150], runs[600]).ratio
    e2 = fd_compare(runs[300], runs[600]).ratio
    assert 4.0 < e1 / e2 < 6.5  # measured 5.02


def test_boundary_trace_is_imposed(params0):
    h = raised_cosine(TimeGrid(0.5, 128), amp=0.2)
    sol = fd_solve(lambda x: 0.0 * x, h, params0, FDConfig(L=30.0, nx=300, dt=1e-3))
    want = np.interp(sol.tgrid.nodes, h.tgrid.nodes, h.h1)
    assert np.max(np.abs(sol.trace(0.0) - want)) < 2e-4
    with pytest.raises(ConfigurationError):
        sol.trace(0.123456)  # not an oracle node


def test_far_boundary_warning(params0):
    # support parked against the truncation edge trips the radiation monitor
    tg = TimeGrid(0.5, 64)
    cfg = FDConfig(L=20.0, nx=200, dt=1e-3)
    with pytest.warns(AccuracyWarning, match="far boundary"):
        fd_solve(lambda x: np.exp(-((x - 16.0) ** 2)), BoundaryData.zero(tg), params0, cfg)


def test_horizon_cannot_exceed_record(params0):
    tg = TimeGrid(0.5, 32)
    with pytest.raises(ConfigurationError):
        fd_solve(lambda x: 0.0 * x, BoundaryData.zero(tg), params0,
                 FDConfig(nx=100), horizon=1.0)
