import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mep_lab.sampling import random_field
from mep_lab.spectral import (
    Grid,
    MultiplierSymbol,
    NonFiniteError,
    RealField,
    SpectralField,
    apply_multiplier,
    dealiased_product,
    divergence,
    gradient,
    laplacian,
    sobolev_norm,
    to_grid,
    to_spectral,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def smooth(grid, seed, kmax=None, mean=0.0):
    return random_field(grid, np.random.default_rng(seed), kmax or grid.n // 6, decay=0.2, mean=mean)


class TestGrid:
    @pytest.mark.parametrize("m,n", [(3, 16), (1, 12), (1, 4), (0, 8)])
    def test_rejects_bad_shapes(self, m, n):
        with pytest.raises(ValueError):
            Grid(m, n)

    def test_wavenumber_range(self):
        g = Grid(1, 16)
        k = g.wavenumbers(0)
        assert sorted(k) == list(range(-7, 9))

    def test_spacing_and_shape(self):
        g = Grid(2, 32)
        assert g.spacing == pytest.approx(2 * np.pi / 32)
        assert g.shape == (32, 32)
        assert g.kmax_dealias == 10

    def test_grid_equality_is_by_metadata(self):
        assert Grid(1, 32) == Grid(1, 32)
        assert Grid(1, 32) != Grid(2, 32)


class TestTransforms:
    def test_constant(self, g64):
        F = to_spectral(RealField(g64, np.ones(64)))
        assert F.coefficient(0) == pytest.approx(1.0)
        rest = np.delete(F.coefficients, 0)
        assert np.max(np.abs(rest)) < 1e-15

    def test_single_mode(self, g64):
        F = to_spectral(RealField(g64, np.cos(g64.x)))
        assert F.coefficient(1) == pytest.approx(0.5)
        assert F.coefficient(-1) == pytest.approx(0.5)
        c = F.coefficients.copy()
        c[[1, -1]] = 0
        assert np.max(np.abs(c)) < 1e-15

    @settings(max_examples=25, deadline=None)
    @given(seeds, st.sampled_from([(1, 64), (1, 256), (2, 32)]))
    def test_roundtrip(self, seed, shape):
        g = Grid(*shape)
        f = smooth(g, seed, mean=0.5)
        back = to_grid(to_spectral(RealField(g, f))).samples
        assert np.max(np.abs(back - f)) <= 1e-13 * np.max(np.abs(f))

    def test_non_finite_names_index(self, g64):
        f = np.zeros(64)
        f[17] = np.nan
        with pytest.raises(NonFiniteError, match=r"\(17,\)"):
            RealField(g64, f)

    def test_hermitian_symmetry_of_real_data(self):
        g = Grid(2, 16)
        F = to_spectral(RealField(g, smooth(g, 3)))
        for k in [(1, 2), (3, -4), (0, 5)]:
            assert F.coefficient(*k) == pytest.approx(np.conj(F.coefficient(-k[0], -k[1])), abs=1e-15)

    def test_shape_mismatch_rejected(self, g64):
        with pytest.raises(ValueError):
            RealField(g64, np.zeros(32))
        with pytest.raises(ValueError):
            SpectralField(g64, np.zeros(16, dtype=complex))


class TestMultipliers:
    def test_bessel_on_constant(self, g64):
        F = to_spectral(RealField(g64, np.full(64, 3.0)))
        out = to_grid(apply_multiplier(F, MultiplierSymbol.bessel_power(-2))).samples
        assert np.allclose(out, 3.0, atol=1e-15)

    def test_bessel_on_cos(self, g64):
        F = to_spectral(RealField(g64, np.cos(g64.x)))
        out = to_grid(apply_multiplier(F, MultiplierSymbol.bessel_power(-2))).samples
        assert np.allclose(out, 0.5 * np.cos(g64.x), atol=1e-15)

    def test_derivative_of_sin(self, g64):
        F = to_spectral(RealField(g64, np.sin(g64.x)))
        out = to_grid(apply_multiplier(F, MultiplierSymbol.derivative(0))).samples
        assert np.allclose(out, np.cos(g64.x), atol=1e-14)

    def test_laplacian_symbol(self):
        g = Grid(2, 16)
        x, y = g.coordinates()
        f = np.cos(2 * x) * np.sin(3 * y)
        out = laplacian(RealField(g, f)).samples
        assert np.allclose(out, -13 * f, atol=1e-12)

    def test_derivative_zeroes_nyquist(self):
        g = Grid(1, 16)
        out = g.deriv(np.cos(8 * g.x))
        assert np.max(np.abs(out)) < 1e-14

    def test_bad_axis(self, g64):
        with pytest.raises(ValueError):
            MultiplierSymbol.derivative(1).values(g64)

    @settings(max_examples=20, deadline=None)
    @given(seeds, st.floats(min_value=-4, max_value=4))
    def test_bessel_composition_identity(self, seed, p):
        g = Grid(1, 128)
        f = smooth(g, seed, mean=0.2)
        back = g.bessel(g.bessel(f, p), -p)
        assert np.max(np.abs(back - f)) <= 1e-12 * np.max(np.abs(f)) * max(1.0, 2.0 ** abs(p))

    @settings(max_examples=20, deadline=None)
    @given(seeds, st.integers(0, 3))
    def test_smoothing_gains_two_derivatives(self, seed, sigma):
        g = Grid(1, 128)
        f = smooth(g, seed)
        a = g.sobolev_norm(g.inv_helmholtz(f), sigma + 2)
        b = g.sobolev_norm(f, sigma)
        assert abs(a - b) <= 1e-12 * b

    @settings(max_examples=20, deadline=None)
    @given(seeds, st.sampled_from([1, 2]))
    def test_derivative_is_skew(self, seed, m):
        g = Grid(m, 32 if m == 2 else 128)
        f = smooth(g, seed)
        h = smooth(g, seed + 1)
        for a in range(m):
            lhs = g.inner(g.deriv(f, a), h) + g.inner(f, g.deriv(h, a))
            scale = np.sqrt(g.inner(f, f) * g.inner(h, h)) * g.n
            assert abs(lhs) <= 1e-12 * scale


class TestGradientDivergence:
    def test_gradient_of_cos(self, g64):
        out = gradient(RealField(g64, np.cos(g64.x))).samples
        assert out.shape == (1, 64)
        assert np.allclose(out[0], -np.sin(g64.x), atol=1e-14)

    def test_divergence_2d(self):
        g = Grid(2, 16)
        x, _ = g.coordinates()
        v = np.stack([np.sin(x), np.zeros(g.shape)])
        assert np.allclose(divergence(RealField(g, v)).samples, np.cos(x), atol=1e-14)

    def test_gradient_of_constant(self):
        g = Grid(2, 16)
        assert np.max(np.abs(gradient(RealField(g, np.full(g.shape, 2.0))).samples)) < 1e-15

    def test_component_mismatch(self, g64):
        with pytest.raises(ValueError):
            divergence(RealField(g64, np.zeros(64)))
        g2 = Grid(2, 16)
        with pytest.raises(ValueError):
            gradient(RealField(g2, np.zeros((2, 16, 16))))

    @settings(max_examples=15, deadline=None)
    @given(seeds, st.sampled_from([1, 2]))
    def test_div_grad_is_laplacian(self, seed, m):
        g = Grid(m, 32 if m == 2 else 128)
        f = smooth(g, seed)
        lap = g.laplacian(f)
        assert np.max(np.abs(g.div(g.grad(f)) - lap)) <= 1e-12 * np.max(np.abs(lap))


class TestDealiasedProduct:
    def test_cos_squared(self):
        g = Grid(1, 16)
        c = np.cos(g.x)
        out = dealiased_product(RealField(g, c), RealField(g, c)).samples
        assert np.allclose(out, 0.5 * (1 + np.cos(2 * g.x)), atol=1e-15)

    def test_one_times_g_is_truncation(self, g64):
        h = smooth(g64, 5, kmax=31)
        out = g64.product(np.ones(64), h)
        # truncation oracle built directly from numpy's FFT
        hh = np.fft.fft(h)
        k = np.fft.fftfreq(64, 1 / 64)
        hh[np.abs(k) > 64 // 3] = 0
        assert np.allclose(out, np.fft.ifft(hh).real, atol=1e-14)

    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_matches_oversampled_product_truncated(self, seed):
        # inputs with |k| <= N/3: the exact product has |k| <= 2N/3 and is
        # resolved alias-free on a 2N grid; the dealiased product is its truncation
        g, fine = Grid(1, 64), Grid(1, 128)
        kb = g.kmax_dealias
        f, h = smooth(g, seed, kb), smooth(g, seed + 7, kb)
        ff, hf = smooth(fine, seed, kb), smooth(fine, seed + 7, kb)
        exact = np.fft.fft(ff * hf) / 128
        kf = np.fft.fftfreq(128, 1 / 128)
        exact[np.abs(kf) > kb] = 0
        oracle = (np.fft.ifft(exact) * 128).real[::2]
        assert np.max(np.abs(g.product(f, h) - oracle)) <= 1e-12 * np.max(np.abs(oracle))

    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_pointwise_when_bandwidth_fits(self, seed):
        g = Grid(1, 128)
        f, h = smooth(g, seed, g.n // 6), smooth(g, seed + 1, g.n // 6)
        assert np.max(np.abs(g.product(f, h) - f * h)) <= 1e-12 * np.max(np.abs(f * h))

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            dealiased_product(RealField(Grid(1, 16), np.ones(16)), RealField(Grid(1, 32), np.ones(32)))


class TestSobolev:
    def test_sin_h0(self, g64):
        assert sobolev_norm(RealField(g64, np.sin(g64.x)), 0) == pytest.approx(np.sqrt(np.pi), rel=1e-14)

    def test_sin_h1(self, g64):
        assert sobolev_norm(RealField(g64, np.sin(g64.x)), 1) == pytest.approx(np.sqrt(2 * np.pi), rel=1e-14)

    def test_zero(self, g64):
        assert sobolev_norm(RealField(g64, np.zeros(64)), 2.5) == 0.0

    def test_negative_sigma_rejected(self, g64):
        with pytest.raises(ValueError):
            sobolev_norm(RealField(g64, np.zeros(64)), -1)

    def test_h1_is_gradient_integral(self):
        g = Grid(2, 32)
        x, y = g.coordinates()
        f = np.sin(x) * np.cos(2 * y) + 0.3
        fx, fy = np.cos(x) * np.cos(2 * y), -2 * np.sin(x) * np.sin(2 * y)
        quad = np.sum(f * f + fx * fx + fy * fy) * g.cell_volume
        assert g.sobolev_norm(f, 1) ** 2 == pytest.approx(quad, rel=1e-13)

    def test_vector_norm_is_root_sum_of_squares(self):
        g = Grid(2, 16)
        x, y = g.coordinates()
        v = np.stack([np.sin(x), np.cos(y)])
        expect = np.hypot(g.sobolev_norm(v[0], 2), g.sobolev_norm(v[1], 2))
        assert g.sobolev_norm(v, 2) == pytest.approx(expect, rel=1e-14)

    @settings(max_examples=25, deadline=None)
    @given(seeds, st.sampled_from([1, 2]))
    def test_parseval(self, seed, m):
        g = Grid(m, 32 if m == 2 else 128)
        f = smooth(g, seed, mean=0.4)
        quad = np.sum(f * f) * g.cell_volume
        assert abs(g.sobolev_norm(f, 0) ** 2 - quad) <= 1e-12 * quad
