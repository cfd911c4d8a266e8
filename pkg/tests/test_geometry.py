import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wake_radon.errors import ConfigurationError, DimensionError
from wake_radon.geometry import (
    RadonGrid, RadonImage, adjoint_values, estimate_lipschitz, inverse_values,
    radon_forward, radon_inverse, radon_inverse_adjoint, ramp_filter,
)
from wake_radon.selftest import dense_operator


class TestGrid:
    def test_default_shape(self):
        g = RadonGrid(128)
        assert g.r_max == math.ceil(128 * math.sqrt(2) / 2) == 91
        assert g.shape == (183, 180)
        assert g.dr == 1.0
        assert g.theta_deg[0] == 0.0 and g.theta_deg[-1] == 179.0

    def test_r_values_symmetric(self):
        g = RadonGrid(33)
        np.testing.assert_array_equal(g.r_values, -g.r_values[::-1])

    def test_index_roundtrip(self):
        g = RadonGrid(64)
        for i in (0, 10, g.n_r - 1):
            assert g.r_index(g.r_of(i)) == i
        for j in (0, 45, 179):
            assert g.theta_index(g.theta_of(j)) == j
        assert g.theta_index(180.0) == 0
        assert g.theta_index(-1.0) == 179

    @pytest.mark.parametrize("kw", [dict(n_theta=1), dict(n_r=1)])
    def test_rejects_degenerate(self, kw):
        with pytest.raises(ConfigurationError):
            RadonGrid(16, **kw)


class TestRadonImage:
    def test_shape_checked(self):
        g = RadonGrid(16)
        with pytest.raises(DimensionError):
            RadonImage(g, np.zeros((3, 3)))

    def test_non_finite_rejected(self):
        g = RadonGrid(16)
        v = np.zeros(g.shape)
        v[0, 0] = np.nan
        with pytest.raises(ValueError):
            RadonImage(g, v)


def test_forward_rejects_non_square():
    with pytest.raises(DimensionError):
        radon_forward(np.zeros((8, 9)), RadonGrid(8))


def test_forward_of_constant_vertical_line():
    # theta = 0, r = 0 is the line x = 0; across a unit image of side M the
    # line integral is M
    g = RadonGrid(128)
    out = radon_forward(np.ones((128, 128)), g)
    assert out.values[g.r_index(0.0), 0] == pytest.approx(128.0, abs=1e-12)


def test_forward_of_constant_diagonal():
    g = RadonGrid(128)
    out = radon_forward(np.ones((128, 128)), g)
    assert out.values[g.r_index(0.0), 45] == pytest.approx(128 * math.sqrt(2), abs=1.0)


def test_forward_line_peaks_at_its_bin():
    M = 64
    g = RadonGrid(M)
    c = (M - 1) / 2
    x = np.arange(M) - c
    X, Y = np.meshgrid(x, -x)
    th = math.radians(60)
    img = (np.abs(X * math.cos(th) + Y * math.sin(th) - 5.0) < 0.6).astype(float)
    out = radon_forward(img, g).values
    i, j = np.unravel_index(np.argmax(out), out.shape)
    assert abs(g.r_of(i) - 5.0) <= 1 and abs(g.theta_of(j) - 60) <= 1


def test_ramp_filter_shape():
    n_pad, filt = ramp_filter(183)
    assert n_pad == 512 and n_pad >= 2 * 183
    assert filt.shape == (n_pad // 2 + 1,)
    assert np.all(np.isfinite(filt)) and np.all(filt >= -1e-12)
    assert filt[-1] == pytest.approx(0.0, abs=1e-12)  # fully tapered at Nyquist


def test_round_trip_smooth_blob():
    M = 64
    c = (M - 1) / 2
    x = np.arange(M) - c
    X, Y = np.meshgrid(x, x)
    blob = np.exp(-(X**2 + Y**2) / (2 * (M / 8) ** 2))
    g = RadonGrid(M)
    rec = radon_inverse(radon_forward(blob, g))
    err = np.linalg.norm(rec - blob) / np.linalg.norm(blob)
    assert err < 0.01


def test_inverse_adjoint_wrappers(grid32, rng):
    x = rng.standard_normal(grid32.shape)
    y = rng.standard_normal((32, 32))
    cx = radon_inverse(RadonImage(grid32, x))
    cty = radon_inverse_adjoint(y, grid32)
    assert isinstance(cty, RadonImage)
    assert np.vdot(cx, y) == pytest.approx(np.vdot(x, cty.values), rel=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([8, 15, 32]))
def test_adjoint_identity_property(seed, M):
    rng = np.random.default_rng(seed)
    g = RadonGrid(M)
    x = rng.standard_normal(g.shape)
    y = rng.standard_normal((M, M))
    lhs = np.vdot(inverse_values(x, g), y)
    rhs = np.vdot(x, adjoint_values(y, g))
    assert abs(lhs - rhs) <= 1e-10 * np.linalg.norm(x) * np.linalg.norm(y)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_forward_is_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    g = RadonGrid(16)
    u, v = rng.standard_normal((2, 16, 16))
    lhs = radon_forward(a * u + b * v, g).values
    rhs = a * radon_forward(u, g).values + b * radon_forward(v, g).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-10 * (1 + abs(a) + abs(b)) * 16)


def test_lipschitz_matches_dense_operator():
    g = RadonGrid(8)
    exact = 2.0 * np.linalg.norm(dense_operator(g), 2) ** 2
    est = estimate_lipschitz(g)
    assert est.converged
    assert est.value == pytest.approx(exact, rel=0.01)
    # frozen from the dense SVD
    assert exact == pytest.approx(0.00549191, rel=1e-5)


def test_lipschitz_needs_iterations():
    with pytest.raises(ConfigurationError):
        estimate_lipschitz(RadonGrid(8), iters=3)
