import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ksbvp.errors import ConfigurationError
from ksbvp.grids import FieldSeries, Grid1D, SpectralField, TimeGrid
from ksbvp.boundary import BoundaryData
from ksbvp.sobolev import (
    NormReport,
    data_norm,
    hr_norm_time,
    hs_norm_halfline,
    hs_norm_line,
    pair_norm_time,
    trace_stations,
    x_eps_norm,
    x_eps_norm_parts,
    x_norm,
    x_norm_parts,
)

# frozen oracle values: H^s norms of exp(-x^2/2) on the line from the
# closed-form transform sqrt(2 pi) exp(-xi^2/2), integrated by adaptive
# quadrature once and pinned here
GAUSS_HS = {
    0.0: 1.331335363800390,
    0.5: 1.458615626884906,
    1.0: 1.630546158916783,  # equals sqrt(1.5 sqrt(pi)) exactly
    2.0: 2.207769935928598,
    -1.0: 1.159005358765323,
}


def line_gaussian(n=1024, L=40.0):
    line = Grid1D(n, L)
    # center the bump so the periodic wraparound is negligible
    vals = np.exp(-((line.nodes - L / 2.0) ** 2) / 2.0)
    return line, SpectralField(line, values=vals)


@pytest.mark.parametrize("s", sorted(GAUSS_HS))
def test_hs_norm_line_against_frozen_oracle(s):
    _, f = line_gaussian()
    assert hs_norm_line(f, s) == pytest.approx(GAUSS_HS[s], rel=1e-8)


def test_hs_norm_halfline_interior_data_matches_line():
    # data far from the boundary: the half-line norm (any extension)
    # agrees with the whole-line norm of the same bump
    grid = Grid1D(1024, 40.0)
    vals = np.exp(-((grid.nodes - 20.0) ** 2) / 2.0)
    f = SpectralField(grid, values=vals)
    for s in (0.0, 1.0, 2.0):
        assert hs_norm_halfline(f, s) == pytest.approx(GAUSS_HS[s], rel=1e-6)


def test_hs_monotone_in_s():
    _, f = line_gaussian()
    ns = [hs_norm_line(f, s) for s in (-1.0, 0.0, 0.5, 1.0, 2.0)]
    assert all(a <= b + 1e-12 for a, b in zip(ns, ns[1:]))


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=-3.0, max_value=3.0),
       st.floats(min_value=-2.0, max_value=2.0))
def test_hs_homogeneity(c, s):
    grid = Grid1D(128, 20.0)
    vals = np.exp(-((grid.nodes - 10.0) ** 2))
    f = SpectralField(grid, values=vals)
    g = SpectralField(grid, values=c * vals)
    assert hs_norm_line(g, s) == pytest.approx(abs(c) * hs_norm_line(f, s), abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=10))
def test_hs_triangle_inequality(seed):
    grid = Grid1D(128, 20.0)
    rng = np.random.default_rng(seed)
    a = SpectralField(grid, values=rng.standard_normal(grid.n))
    b = SpectralField(grid, values=rng.standard_normal(grid.n))
    ab = SpectralField(grid, values=np.real(a.values + b.values))
    for s in (-1.0, 0.0, 1.5):
        assert hs_norm_line(ab, s) <= hs_norm_line(a, s) + hs_norm_line(b, s) + 1e-10


def test_hr_norm_time_r0_is_l2():
    tg = TimeGrid(1.0, 512)
    y = np.sin(2 * np.pi * tg.nodes) ** 2 * np.exp(-tg.nodes)
    direct = math.sqrt(np.trapezoid(y**2, dx=tg.dt))
    assert hr_norm_time(y, tg.dt, 0.0) == pytest.approx(direct, rel=1e-3)


def test_hr_norm_time_monotone_in_r():
    tg = TimeGrid(1.0, 512)
    y = np.sin(2 * np.pi * tg.nodes) * (1 - np.cos(2 * np.pi * tg.nodes))
    n0 = hr_norm_time(y, tg.dt, 0.0)
    n1 = hr_norm_time(y, tg.dt, 0.375)
    n2 = hr_norm_time(y, tg.dt, 1.0)
    assert n0 <= n1 <= n2


def test_x_norm_parts_structure(grid256):
    tg = TimeGrid(0.5, 16)
    rng = np.random.default_rng(1)
    rows = rng.standard_normal((17, grid256.n)) * np.exp(-grid256.nodes / 3.0)
    u = FieldSeries(grid256, tg, rows)
    parts = x_norm_parts(u, 0.0)
    total = x_norm(u, 0.0)
    assert set(parts) >= {"sup_t_hs", "l2_t_hs2"}
    assert all(v >= 0.0 for v in parts.values())
    assert total >= max(parts.values()) - 1e-12
    assert total <= sum(parts.values()) + 1e-12


def test_x_norm_zero_series(grid256):
    tg = TimeGrid(0.5, 8)
    u = FieldSeries.zeros(grid256, tg)
    assert x_norm(u, 0.0) == 0.0


def test_weighted_norm_rejects_parameters_outside_strip(grid256):
    tg = TimeGrid(0.5, 16)
    u = FieldSeries.zeros(grid256, tg)
    with pytest.raises(ConfigurationError):
        x_eps_norm(u, 0.0, 0.0)  # weighted branch needs -2 < s < 0, eps > 0
    with pytest.raises(ConfigurationError):
        x_eps_norm(u, -1.0, 0.0)


def test_weighted_parts_keys(grid256):
    tg = TimeGrid(0.5, 16)
    rng = np.random.default_rng(3)
    rows = rng.standard_normal((17, grid256.n)) * np.exp(-grid256.nodes / 3.0)
    u = FieldSeries(grid256, tg, rows)
    parts = x_eps_norm_parts(u, -1.0, 0.05)
    assert all(v >= 0.0 for v in parts.values())


def test_pair_norm_and_data_norm(grid256):
    tg = TimeGrid(1.0, 128)
    h1 = np.sin(np.pi * tg.nodes) ** 2
    h = BoundaryData(tg, h1, 0.0 * h1)
    p = pair_norm_time(h, 0.0)
    assert p > 0
    z = BoundaryData.zero(tg)
    assert pair_norm_time(z, 0.0) == 0.0
    vals = np.exp(-((grid256.nodes - 10.0) ** 2))
    f = SpectralField(grid256, values=vals)
    total = data_norm(f, h, 0.0)
    assert total == pytest.approx(hs_norm_halfline(f, 0.0) + p, rel=1e-12)


def test_trace_stations_selection(grid256):
    stations = trace_stations(grid256, count=8)
    assert len(stations) == 8
    # node indices, used to column-slice series values
    assert all(0 <= int(j) < grid256.n for j in stations)
    assert len(set(int(j) for j in stations)) == 8


def test_norm_report_validation():
    r = NormReport("demo", 1.0, 2.0)
    assert r.ratio == 0.5
    with pytest.raises(ConfigurationError):
        NormReport("demo", -1.0, 1.0)
    with pytest.raises(ConfigurationError):
        NormReport("demo", 1.0, 0.0)
