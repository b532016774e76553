import warnings

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from ksbvp.boundary import BoundaryData
from ksbvp.compat import (
    check_compat,
    compat_case,
    corner_values,
    fit_time_derivative,
    phi_k_sequence,
    required_conditions,
)
from ksbvp.errors import AccuracyWarning, ConfigurationError
from ksbvp.grids import Grid1D, SpectralField, TimeGrid

X = sp.Symbol("x")


def test_linear_profile_sequence_closed_form():
    # phi = x: the quartic and quadratic terms drop out and the quadratic
    # recursion alone gives -x, then 2x, independent of the drift
    for delta in (0.0, 1.0, -2.5):
        seq = phi_k_sequence(X, delta, 2)
        assert sp.simplify(seq[0] - X) == 0
        assert sp.simplify(seq[1] + X) == 0
        assert sp.simplify(seq[2] - 2 * X) == 0


def test_gaussian_sequence_symbolic_vs_spectral_grid():
    # even profile about x = 0 so the reflected extension is smooth
    expr = sp.exp(-(X**2) / 8)
    vs, ds = corner_values(expr, 0.0, 2)
    grid = Grid1D(1024, 30.0)
    f = SpectralField(grid, values=np.exp(-(grid.nodes**2) / 8.0))
    vg, dg = corner_values(f, 0.0, 2, method="spectral")
    assert np.max(np.abs(vg - vs)) < 1e-8
    assert np.max(np.abs(dg - ds)) < 1e-8


def test_fd_corner_path_first_order_only():
    # the composed one-sided stencils are only good for the k = 0 row;
    # deeper rows carry boundary-closure error that the dual-resolution
    # check is there to catch
    expr = 0.5 * sp.exp(-(((X - 3) / 2) ** 2))
    vs, ds = corner_values(expr, 0.7, 1)
    grid = Grid1D(1024, 30.0)
    f = SpectralField(grid, values=0.5 * np.exp(-(((grid.nodes - 3.0) / 2.0) ** 2)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AccuracyWarning)
        vg, dg = corner_values(f, 0.7, 1, method="fd")
    assert abs(vg[0] - vs[0]) < 1e-12
    assert abs(dg[0] - ds[0]) < 1e-5


def test_case_tags_follow_fractional_part():
    assert [compat_case(s) for s in (0.2, 1.2, 2.2, 4.1, 5.2, 7.9)] == [
        "i", "ii", "iii", "i", "ii", "iii",
    ]


def test_required_conditions_table():
    assert required_conditions(0.5) == []
    assert required_conditions(-1.0) == []
    assert required_conditions(1.0) == [("value", 0)]
    assert required_conditions(2.0) == [("value", 0), ("deriv", 0)]
    assert required_conditions(4.0) == [("value", 0), ("deriv", 0)]
    assert required_conditions(5.0) == [("value", 0), ("deriv", 0), ("value", 1)]


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=-2.0, max_value=9.0), st.floats(min_value=0.0, max_value=3.0))
def test_condition_count_monotone_in_s(s, bump):
    assert len(required_conditions(s)) <= len(required_conditions(s + bump))


def test_check_compat_vacuous_below_half():
    grid = Grid1D(128, 20.0)
    phi = SpectralField(grid, values=np.exp(-grid.nodes))
    h = BoundaryData.zero(TimeGrid(1.0, 64))
    for s in (-1.0, 0.0, 0.5):
        rep = check_compat(phi, h, s)
        assert rep.compatible and not rep.conditions
    with pytest.raises(ConfigurationError):
        check_compat(phi, h, -2.5)


def test_check_compat_matching_pair():
    grid = Grid1D(1024, 30.0)
    phi = SpectralField(grid, values=np.exp(-grid.nodes))
    tg = TimeGrid(1.0, 256)
    ones = np.ones(tg.steps + 1)
    # exp(-x): value 1 and slope -1 at the corner; constant traces match
    rep = check_compat(phi, BoundaryData(tg, ones, -ones), 2.0)
    assert rep.compatible
    assert not rep.inconclusive
    assert len(rep.conditions) == 2
    assert rep.mismatches == []


def test_check_compat_flags_mismatch():
    grid = Grid1D(1024, 30.0)
    phi = SpectralField(grid, values=np.exp(-grid.nodes))
    tg = TimeGrid(1.0, 256)
    rep = check_compat(phi, BoundaryData.zero(tg), 2.0)
    assert not rep.compatible
    assert len(rep.mismatches) == 2
    d = rep.as_dict()
    assert d["case"] == "iii" and d["compatible"] is False


def test_fit_time_derivative_polynomial_exact():
    t = np.linspace(0.0, 1.0, 257)
    y = 3.0 + 2.0 * t + 5.0 * t**2
    for k, want in ((0, 3.0), (1, 2.0), (2, 10.0)):
        got, resid = fit_time_derivative(t, y, k)
        assert got == pytest.approx(want, rel=1e-6)
        assert resid < 1e-8
    with pytest.raises(ConfigurationError):
        fit_time_derivative(t[:3], y[:3], 1)


def test_fd_sequence_warns_on_unresolved_profile():
    grid = Grid1D(256, 20.0)
    rng = np.random.default_rng(0)
    noisy = SpectralField(grid, values=rng.standard_normal(grid.n))
    with pytest.warns(AccuracyWarning):
        phi_k_sequence(noisy, 0.0, 2, method="fd")


def test_phi_k_sequence_validation(grid256):
    phi = SpectralField(grid256, values=np.exp(-grid256.nodes))
    with pytest.raises(ConfigurationError):
        phi_k_sequence(phi, 0.0, -1)
    with pytest.raises(ConfigurationError):
        phi_k_sequence(phi, 0.0, 1, method="nope")
    with pytest.raises(ConfigurationError):
        phi_k_sequence([1.0, 2.0], 0.0, 1)
