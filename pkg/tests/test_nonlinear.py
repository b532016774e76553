import math
import warnings

import numpy as np
import pytest

from ksbvp.boundary import BoundaryData
from ksbvp.datafam import gaussian, raised_cosine, random_profile
from ksbvp.errors import AccuracyWarning, ConfigurationError, DivergenceError
from ksbvp.grids import FieldSeries, Grid1D, ModelParams, SpectralField, TimeGrid
from ksbvp.nonlinear import (
    ConstantsCalibration,
    bilinear_source_ratio,
    bootstrap_time_derivative,
    calibrate_constants,
    gamma_apply,
    linear_solution,
    pick_local_step,
    solve_global,
    solve_weighted,
    splitting_report,
)
from ksbvp.sobolev import hs_norm_halfline

from conftest import FROZEN_CALIB


def unit_calibration():
    return ConstantsCalibration.from_dict(
        {"c1": 1.0, "c2": 1.0, "c_energy": 1.0, "ensemble": 1, "seed": 0}
    )


@pytest.fixture(scope="module")
def small_gaussian(grid256):
    return gaussian(grid256, amp=0.01, center=10.0, width=1.5)


@pytest.fixture(scope="module")
def monitored_record(grid256, params0, calib, small_gaussian):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        return solve_global(small_gaussian, None, params0, 0.5, calib=calib,
                            monitor_energy=True)


def test_step_picker_frozen_schedule(grid256, params0):
    # unit constants, unit data: d = 2, and the dyadic walk from 2^6
    # stops at 2^-13, the largest T with sqrt(T) + T^(1/4) <= 1/8
    vals = np.exp(-((grid256.nodes - 10.0) ** 2))
    f = SpectralField(grid256, values=vals)
    f = SpectralField(grid256, values=vals / hs_norm_halfline(f, 0.0))
    h = BoundaryData.zero(TimeGrid(1.0, 16))
    T, d = pick_local_step(f, h, params0, unit_calibration())
    assert d == pytest.approx(2.0, rel=1e-12)
    assert T == 2.0**-13
    # the boundary is sharp: one dyadic level up already fails
    for Tc, want in ((2.0**-13, True), (2.0**-12, False)):
        ok = math.sqrt(Tc) <= 0.25 and (math.sqrt(Tc) + Tc**0.25) * 2.0 <= 0.25
        assert ok is want


def test_step_picker_requires_calibration(grid256, params0, zero_h):
    f = SpectralField(grid256, values=np.exp(-grid256.nodes))
    with pytest.raises(ConfigurationError):
        pick_local_step(f, zero_h(1.0), params0, None)


def test_gamma_of_zero_is_the_linear_solution(grid256, params0, small_gaussian):
    tg = TimeGrid(0.125, 32)
    h = BoundaryData.zero(tg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        lin = linear_solution(small_gaussian, h, tg, params0)
        g0 = gamma_apply(FieldSeries.zeros(grid256, tg), small_gaussian, h, params0)
    assert np.max(np.abs(g0.values - lin.values)) == 0.0


def test_zero_data_solves_to_zero(grid256, params0, calib):
    z = SpectralField(grid256, values=np.zeros(grid256.n))
    rec = solve_global(z, None, params0, 0.25, calib=calib)
    assert np.max(np.abs(rec.fields)) == 0.0
    assert all(p.ball == 0.0 for p in rec.patches)


def test_global_solve_contracts_and_chains(monitored_record):
    rec = monitored_record
    assert len(rec.patches) >= 2
    assert max(p.kappa for p in rec.patches) < 0.6      # measured 0.149
    assert max(p.residual for p in rec.patches) < 1e-8  # measured 4e-11
    assert all(p.ball_ok for p in rec.patches)
    assert max(rec.seam_gaps) < 1e-10                   # exact by construction
    assert rec.times[0] == 0.0 and rec.times[-1] == pytest.approx(0.5)


def test_energy_ledger_clean(monitored_record, calib):
    led = monitored_record.energy
    s = led.summary()
    assert s["flagged"] == 0 and led.ok
    assert led.envelope_ok
    assert s["c_used"] == calib.c_energy
    assert np.all(led.z2 >= 0.0) and np.all(led.envelope >= led.z2[0] * 0.0)


def test_divergence_is_detected(grid256, params0):
    # deliberately broken constants: a tiny c2 admits a huge window on
    # large data, so the increments grow and the guard must fire
    bad = ConstantsCalibration.from_dict(
        {"c1": 0.01, "c2": 1e-6, "c_energy": 1.0, "ensemble": 1, "seed": 1}
    )
    big = gaussian(grid256, amp=2.0, center=10.0, width=1.0)
    with pytest.raises(DivergenceError) as err:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AccuracyWarning)
            solve_global(big, None, params0, 1.0, calib=bad, steps_per_patch=32)
    assert err.value.history  # increment trail travels with the exception


def test_bilinear_source_ratio_stable_in_horizon(grid256):
    rng = np.random.default_rng(5)
    U = np.real(random_profile(grid256, rng).values)
    V = np.real(random_profile(grid256, rng).values)
    ratios = []
    for T in (0.25, 0.5, 1.0):
        tg = TimeGrid(T, 48)
        srel = tg.nodes / T
        u = FieldSeries(grid256, tg, (srel**2 * (1 - 0.5 * srel))[:, None] * U[None, :])
        v = FieldSeries(grid256, tg, (1 - 0.5 * srel**2)[:, None] * V[None, :])
        ratios.append(bilinear_source_ratio(u, v))
    assert all(r > 0 for r in ratios)
    assert max(ratios) / min(ratios) < 2.0  # measured spread 1.35


def test_bootstrap_derivative_tracks_record(grid256, params0, calib, small_gaussian):
    # keep every row so the resampled record is exact at the check nodes;
    # the residual late-window mismatch then shrinks like the checker's
    # own dt^2, showing the solved derivative is the more accurate side
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        rec = solve_global(small_gaussian, None, params0, 0.25, calib=calib,
                           steps_per_patch=64, keep_every=1)
        _, rep64 = bootstrap_time_derivative(rec, small_gaussian, None, params0, steps=64)
        _, rep32 = bootstrap_time_derivative(rec, small_gaussian, None, params0, steps=32)
    assert rep64["rel_vs_fd_dudt_late"] < 2e-3   # measured 6.5e-4
    assert rep32["rel_vs_fd_dudt_late"] / rep64["rel_vs_fd_dudt_late"] > 2.5
    assert rep64["coupled"]


def test_weighted_solve_contracts(grid256, calib, small_gaussian):
    pw = ModelParams(0.0, -1.0, 0.05)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        st = solve_weighted(small_gaussian, None, pw, 0.5, calib=calib)
    assert st.converged
    assert st.kappa < 1.0          # measured 0.227
    assert st.residual < 1e-6      # measured 3e-9
    assert st.norm_parts           # weighted parts recorded


def test_weighted_solve_validation(grid256, calib, small_gaussian):
    with pytest.raises(ConfigurationError):
        solve_weighted(small_gaussian, None, ModelParams(0.0, 0.0, 0.0), 0.5, calib=calib)
    with pytest.raises(ConfigurationError):
        solve_weighted(small_gaussian, None, ModelParams(0.0, -1.0, 0.05), 2.0, calib=calib)


def test_weighted_splitting_identity(grid256):
    pw = ModelParams(0.0, -1.0, 0.05)
    h = raised_cosine(TimeGrid(0.5, 256), amp=0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        rep = splitting_report(h, grid256, pw, 0.5, steps=256)
    assert rep.ratio < 1e-4        # measured 2.2e-6
    assert rep.data["gamma"] == pytest.approx(0.3)
    with pytest.raises(ConfigurationError):
        splitting_report(h, grid256, pw, 0.5, steps=128)


def test_calibration_reproduces_frozen_constants(params0):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        got = calibrate_constants(params0, ensemble=FROZEN_CALIB["ensemble"],
                                  seed=FROZEN_CALIB["seed"])
    assert got.c1 == pytest.approx(FROZEN_CALIB["c1"], rel=1e-3)
    assert got.c2 == pytest.approx(FROZEN_CALIB["c2"], rel=1e-3)
    assert got.c_energy == pytest.approx(FROZEN_CALIB["c_energy"], rel=1e-3)
    again = calibrate_constants(params0, ensemble=FROZEN_CALIB["ensemble"],
                                seed=FROZEN_CALIB["seed"])
    assert got.as_dict() == again.as_dict()


def test_calibration_validation():
    with pytest.raises(ConfigurationError):
        ConstantsCalibration(c1=-1.0, c2=1.0, c_energy=1.0, ensemble=1, seed=0)
    c = ConstantsCalibration.from_dict(
        {"c1": 2.0, "c2": 0.5, "c_energy": 1.5, "ensemble": 3, "seed": 9, "extra": 1}
    )
    assert c.as_dict()["ensemble"] == 3
