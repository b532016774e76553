import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ksbvp.errors import ConfigurationError
from ksbvp.grids import (
    BLEND4_COEFFS,
    FieldSeries,
    Grid1D,
    ModelParams,
    SpectralField,
    TimeGrid,
    blend_coefficients,
    extend_rows,
    extend_to_line,
)


# --- oracle: the reflection-blend weights are the Lagrange extrapolation
# weights l_k(-1) on nodes {1..order}; recompute them independently

def lagrange_weights_at(nodes, x):
    out = []
    for k, xk in enumerate(nodes):
        others = [xj for j, xj in enumerate(nodes) if j != k]
        w = np.prod([(x - xj) / (xk - xj) for xj in others])
        out.append(w)
    return np.array(out)


def test_blend4_coefficients_are_lagrange_weights():
    ref = lagrange_weights_at([1, 2, 3, 4], -1.0)
    assert np.allclose(blend_coefficients(4), ref, atol=1e-12)
    assert tuple(blend_coefficients(4)) == pytest.approx(BLEND4_COEFFS)


def test_blend4_frozen_values():
    assert BLEND4_COEFFS == (10.0, -20.0, 15.0, -4.0)


def test_blend_extension_reproduces_cubics():
    # extrapolation by l_k(-1) is exact on polynomials of degree < order
    grid = Grid1D(64, 8.0)
    x = grid.nodes
    f = 0.3 - 1.2 * x + 0.5 * x**2 - 0.04 * x**3
    ext = extend_rows(grid, f[None, :], rule="blend4")[0]
    # mirrored node -x_1 sits at index n-1 of the doubled grid
    xl = -x[1]
    want = 0.3 - 1.2 * xl + 0.5 * xl**2 - 0.04 * xl**3
    assert abs(ext[grid.n - 1].real - want) < 1e-10


def test_grid_validation():
    with pytest.raises(ConfigurationError):
        Grid1D(100, 10.0)  # not a power of two
    with pytest.raises(ConfigurationError):
        Grid1D(4, 10.0)
    with pytest.raises(ConfigurationError):
        Grid1D(64, -1.0)


def test_doubled_grid_geometry():
    grid = Grid1D(64, 8.0)
    line = grid.doubled()
    assert line.n == 128
    assert line.origin == -8.0
    assert line.nodes[64] == 0.0
    assert np.isclose(line.dx, grid.dx)


def test_time_grid_nodes():
    tg = TimeGrid(0.5, 10, start=0.25)
    assert tg.dt == pytest.approx(0.05)
    assert tg.nodes[0] == 0.25
    assert tg.nodes[-1] == pytest.approx(0.75)
    with pytest.raises(ConfigurationError):
        TimeGrid(1.0, 0)


def test_model_params_weighted_window():
    ModelParams(delta=0.0, s=-1.0, eps=0.05).require_weighted()
    with pytest.raises(ConfigurationError):
        ModelParams(delta=0.0, s=0.5, eps=0.05).require_weighted()
    with pytest.raises(ConfigurationError):
        # s below -2 + 4 eps is outside the admissible strip
        ModelParams(delta=0.0, s=-1.95, eps=0.05).require_weighted()


def test_spectral_field_round_trip(grid256):
    rng = np.random.default_rng(3)
    vals = rng.standard_normal(grid256.n)
    f = SpectralField(grid256, values=vals)
    g = SpectralField(grid256, coeffs=f.coeffs)
    assert np.allclose(np.real(g.values), vals, atol=1e-12)


def test_field_series_algebra(grid256):
    tg = TimeGrid(1.0, 4)
    a = FieldSeries(grid256, tg, np.ones((5, grid256.n)))
    c = a * 2.0 - a
    assert np.allclose(np.real(c.values), 1.0)
    assert np.allclose(np.real((a + a).values), 2.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=63))
def test_zero_rule_extension_is_zero_padding(j):
    grid = Grid1D(64, 8.0)
    f = np.zeros(64)
    f[j] = 1.0
    ext = extend_rows(grid, f[None, :], rule="zero")[0]
    assert np.all(ext[:64] == 0)
    assert ext[64 + j].real == 1.0


def test_extension_linearity(grid256):
    rng = np.random.default_rng(5)
    f = rng.standard_normal(grid256.n)
    g = rng.standard_normal(grid256.n)
    both = extend_rows(grid256, (2.0 * f + g)[None, :], rule="blend4")[0]
    parts = (2.0 * extend_rows(grid256, f[None, :], rule="blend4")[0]
             + extend_rows(grid256, g[None, :], rule="blend4")[0])
    assert np.allclose(both, parts, atol=1e-11)


def test_extend_to_line_matches_extend_rows(grid256):
    rng = np.random.default_rng(7)
    vals = rng.standard_normal(grid256.n)
    f = SpectralField(grid256, values=vals)
    a = extend_to_line(f, rule="blend4").values
    b = extend_rows(grid256, vals[None, :], rule="blend4")[0]
    assert np.allclose(a, b, atol=1e-12)
