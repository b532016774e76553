import numpy as np
import pytest

from ksbvp.datafam import (
    BOUNDARY_PRESETS,
    PROFILES,
    make_boundary,
    make_profile,
    poly_ramp,
    raised_cosine,
    random_boundary,
    random_profile,
)
from ksbvp.errors import ConfigurationError
from ksbvp.grids import TimeGrid


def test_profile_presets_cover_declared_names(grid256):
    assert set(PROFILES) == {"gaussian", "exp_decay", "smooth_bump"}
    for name in PROFILES:
        f = make_profile(grid256, name)
        assert f.values.shape == (grid256.n,)
        assert np.all(np.isfinite(f.values))


def test_boundary_presets_cover_declared_names():
    tg = TimeGrid(1.0, 64)
    assert set(BOUNDARY_PRESETS) == {"raised_cosine", "poly_ramp", "zero"}
    for name in BOUNDARY_PRESETS:
        h = make_boundary(tg, name)
        assert h.h1.shape == (tg.steps + 1,)


def test_raised_cosine_window_endpoints():
    tg = TimeGrid(2.0, 256)
    h = raised_cosine(tg, amp=0.3, t_on=0.2, t_off=1.6)
    rel = tg.nodes - tg.start
    assert np.all(h.h1[rel < 0.2] == 0.0)
    assert np.all(h.h1[rel > 1.6] == 0.0)
    assert h.h1.max() == pytest.approx(0.3, rel=1e-3)
    assert np.all(h.h2 == 0.0)


def test_raised_cosine_rejects_bad_window():
    tg = TimeGrid(1.0, 32)
    with pytest.raises(ConfigurationError):
        raised_cosine(tg, t_on=0.5, t_off=0.2)
    with pytest.raises(ConfigurationError):
        raised_cosine(tg, t_on=-0.1, t_off=0.5)
    with pytest.raises(ConfigurationError):
        raised_cosine(tg, t_on=0.1, t_off=1.5)


def test_poly_ramp_vanishes_at_ends_and_normalizes():
    tg = TimeGrid(1.0, 200)
    h = poly_ramp(tg, amp=0.7, power=3)
    assert h.h1[0] == 0.0
    assert h.h1[-1] == pytest.approx(0.0, abs=1e-14)
    # the 4^power factor pins the midpoint value at amp
    assert h.h1[100] == pytest.approx(0.7, rel=1e-12)
    with pytest.raises(ConfigurationError):
        poly_ramp(tg, power=0)


def test_random_families_are_seed_deterministic(grid256):
    tg = TimeGrid(0.5, 64)
    f1 = random_profile(grid256, np.random.default_rng(7))
    f2 = random_profile(grid256, np.random.default_rng(7))
    assert np.array_equal(f1.values, f2.values)
    h1 = random_boundary(tg, np.random.default_rng(7), with_h2=True)
    h2 = random_boundary(tg, np.random.default_rng(7), with_h2=True)
    assert np.array_equal(h1.h1, h2.h1)
    assert np.array_equal(h1.h2, h2.h2)
    h3 = random_boundary(tg, np.random.default_rng(8), with_h2=True)
    assert not np.array_equal(h1.h1, h3.h1)


def test_random_boundary_modulation_toggle():
    tg = TimeGrid(0.5, 64)
    plain = random_boundary(tg, np.random.default_rng(3), modulate=False)
    # an unmodulated window is one-signed; the modulated one usually is not
    assert plain.h1.min() >= 0.0 or plain.h1.max() <= 0.0
    assert plain.h1[0] == 0.0


def test_random_boundary_vanishes_at_corner():
    tg = TimeGrid(1.0, 128)
    for seed in range(5):
        h = random_boundary(tg, np.random.default_rng(seed), with_h2=True)
        assert h.h1[0] == 0.0
        assert h.h2[0] == 0.0


def test_unknown_preset_names_raise(grid256):
    tg = TimeGrid(1.0, 16)
    with pytest.raises(ConfigurationError):
        make_profile(grid256, "sinc")
    with pytest.raises(ConfigurationError):
        make_boundary(tg, "chirp")
    with pytest.raises(ConfigurationError):
        random_profile(grid256, np.random.default_rng(0), kind="wavelet")
