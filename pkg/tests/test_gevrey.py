import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mep_lab.eulerian import SolverConfig, evolve
from mep_lab.gevrey import (
    ScaleParams,
    alg_inequality_check,
    alg_inequality_sides,
    analyticity_radius,
    es_norm,
    mode_amplitudes,
    operator_bound_check,
    product_lemma_check,
    radius_track,
    synthetic_decay_field,
)
from mep_lab.harness.presets import make_state
from mep_lab.sampling import random_field
from mep_lab.spectral import Grid

seeds = st.integers(min_value=0, max_value=2**32 - 1)
s_values = st.floats(min_value=0.05, max_value=0.95)


def field(g, seed, kmax=20):
    return random_field(g, np.random.default_rng(seed), kmax, decay=0.3)


def direct_es_norm(amp, s, sigma=2, j_max=24):
    """Oracle summed mode by mode from {k: |u_k|} over 0 < |k| < n/2."""
    best = 0.0
    for j in range(j_max + 1):
        sq = math.fsum(a**2 * abs(k) ** (2 * j) * (1 + k * k) ** sigma for k, a in amp.items())
        best = max(best, math.sqrt(2 * math.pi * sq) * s**j * (j + 1) ** 2 / math.factorial(j))
    return best


class TestScaleParams:
    @pytest.mark.parametrize("kw", [{"s": 0.0}, {"s": 1.0}, {"sigma": 1}, {"sigma": 2.5}, {"j_max": 0}])
    def test_rejects_invalid(self, kw):
        with pytest.raises(ValueError):
            ScaleParams(**kw)

    def test_defaults(self):
        p = ScaleParams()
        assert (p.s, p.sigma, p.j_max) == (0.5, 2, 24)


class TestEsNorm:
    def test_cos(self, g64):
        # ||d^j cos||_{H^2} = sqrt(4 pi) for every j; max_j 0.5^j (j+1)^2 / j! = 2 at j = 1
        e = es_norm(g64, np.cos(g64.x), ScaleParams(0.5))
        assert e.value == pytest.approx(2 * math.sqrt(4 * math.pi), rel=1e-13)
        assert e.argmax_j == 1 and e.attained_below_cap

    def test_zero(self, g64):
        assert es_norm(g64, np.zeros(64), ScaleParams()).value == 0.0

    def test_mean_is_removed_and_reported(self, g64):
        e = es_norm(g64, 3.0 + np.cos(g64.x), ScaleParams(0.5))
        assert e.mean_removed == pytest.approx(3.0)
        assert e.value == pytest.approx(es_norm(g64, np.cos(g64.x), ScaleParams(0.5)).value, rel=1e-13)

    @pytest.mark.parametrize("s", [0.3, 0.5, 0.9])
    def test_exponential_decay_matches_direct_sum(self, g64, s):
        u = synthetic_decay_field(g64, 1.0)
        value = es_norm(g64, u, ScaleParams(s)).value
        assert math.isfinite(value)
        # amplitudes as sampled: the smallest exact ones (e^{-31}) carry visible round-off
        uh = np.abs(np.fft.fft(u - np.mean(u)) / 64)
        sampled = {k: uh[k] for k in range(-31, 32) if k}
        assert value == pytest.approx(direct_es_norm(sampled, s), rel=1e-12)
        exact = {k: math.exp(-abs(k)) for k in range(-31, 32) if k}
        assert value == pytest.approx(direct_es_norm(exact, s), rel=1e-4)

    def test_rejects_two_dimensions(self):
        g = Grid(2, 16)
        with pytest.raises(ValueError):
            es_norm(g, np.zeros(g.shape), ScaleParams())

    @settings(max_examples=50, deadline=None)
    @given(seeds, s_values, st.floats(min_value=-5, max_value=5).filter(lambda c: abs(c) > 1e-3))
    def test_homogeneity(self, seed, s, c):
        g = Grid(1, 128)
        u = field(g, seed)
        p = ScaleParams(s)
        assert abs(es_norm(g, c * u, p).value - abs(c) * es_norm(g, u, p).value) <= 1e-12 * abs(c) * es_norm(g, u, p).value

    @settings(max_examples=50, deadline=None)
    @given(seeds, s_values)
    def test_triangle(self, seed, s):
        g = Grid(1, 128)
        u, w = field(g, seed), field(g, seed + 1)
        p = ScaleParams(s)
        a, b = es_norm(g, u, p).value, es_norm(g, w, p).value
        assert es_norm(g, u + w, p).value <= (a + b) * (1 + 1e-12)

    @settings(max_examples=50, deadline=None)
    @given(seeds, s_values, st.floats(min_value=0.01, max_value=0.99))
    def test_monotone_in_s(self, seed, s, frac):
        g = Grid(1, 128)
        u = field(g, seed)
        assert es_norm(g, u, ScaleParams(s * frac)).value <= es_norm(g, u, ScaleParams(s)).value * (1 + 1e-12)


class TestProductAndOperators:
    def test_product_cos_cos(self, g64):
        r = product_lemma_check(g64, np.cos(g64.x), np.cos(g64.x), ScaleParams(0.5))
        assert math.isfinite(r) and r > 0

    def test_product_cos_sin(self, g64):
        r = product_lemma_check(g64, np.cos(g64.x), np.sin(g64.x), ScaleParams(0.5))
        assert math.isfinite(r) and r > 0

    def test_product_rejects_zero(self, g64):
        with pytest.raises(ValueError):
            product_lemma_check(g64, np.ones(64), np.cos(g64.x), ScaleParams())

    def test_product_constant_is_stable_across_s(self, g128):
        worst = {}
        for s in (0.3, 0.5, 0.7):
            ratios = [product_lemma_check(g128, field(g128, i, 10), field(g128, 100 + i, 10), ScaleParams(s)) for i in range(50)]
            worst[s] = max(ratios)
        assert all(math.isfinite(c) for c in worst.values())
        assert max(worst.values()) / min(worst.values()) < 10

    def test_p3_on_cos(self, g64):
        # Lambda^{-2} cos = cos / 2
        assert operator_bound_check(g64, "P3", np.cos(g64.x), 0.5).ratio == pytest.approx(0.5, rel=1e-13)

    @settings(max_examples=50, deadline=None)
    @given(seeds, s_values)
    def test_p3_ratio_at_most_one(self, seed, s):
        g = Grid(1, 128)
        assert operator_bound_check(g, "P3", field(g, seed), s).ratio <= 1 + 1e-12

    def test_p1_and_p4_on_cos(self, g64):
        c = np.cos(g64.x)
        p1 = operator_bound_check(g64, "P1", c, 0.5, 0.25)
        p4 = operator_bound_check(g64, "P4", c, 0.5, 0.25, v=c)
        assert math.isfinite(p1.ratio) and p1.ratio > 0
        assert math.isfinite(p4.ratio) and p4.ratio > 0

    def test_operator_errors(self, g64):
        c = np.cos(g64.x)
        with pytest.raises(ValueError):
            operator_bound_check(g64, "P1", c, 0.5)
        with pytest.raises(ValueError):
            operator_bound_check(g64, "P4", c, 0.5, 0.25)
        with pytest.raises(ValueError):
            operator_bound_check(g64, "P3", np.ones(64), 0.5)
        with pytest.raises(ValueError):
            operator_bound_check(g64, "P5", c, 0.5, 0.25)


class TestAlgInequality:
    def test_k0(self):
        assert alg_inequality_sides(0, 0.5, 0.25) == (Fraction(1, 2), Fraction(4))

    def test_k1(self):
        assert alg_inequality_sides(1, 0.5, 0.25) == (Fraction(8, 9), Fraction(4))

    def test_sweep(self):
        rng = np.random.default_rng(7)
        pairs = [(s, s * f) for s, f in zip(rng.uniform(0.01, 0.99, 50), rng.uniform(0.01, 0.99, 50))]
        assert all(alg_inequality_check(k, s, sp) for s, sp in pairs for k in range(201))

    @pytest.mark.parametrize("args", [(-1, 0.5, 0.25), (1, 0.25, 0.5), (1, 1.0, 0.5), (1, 0.5, 0.0)])
    def test_rejects_invalid(self, args):
        with pytest.raises(ValueError):
            alg_inequality_sides(*args)


class TestAnalyticityRadius:
    @pytest.mark.parametrize("rate", [0.2, 0.5, 1.0])
    def test_synthetic_recovery(self, rate):
        g = Grid(1, 512)
        est = analyticity_radius(g, synthetic_decay_field(g, rate))
        assert not est.inconclusive
        assert abs(est.sigma_fit - rate) <= 1e-3
        assert est.fit_quality > 0.999999

    def test_band_limited_is_inconclusive_or_large(self, g64):
        c = np.cos(g64.x)
        est = analyticity_radius(g64, 1 + c + 0.3 * c**3)
        assert est.inconclusive or est.sigma_fit > 5

    def test_noise_below_floor_is_excluded(self, g64):
        noise = 1e-16 * np.random.default_rng(0).standard_normal(64)
        est = analyticity_radius(g64, np.cos(g64.x) + noise)
        clean = analyticity_radius(g64, np.cos(g64.x))
        assert est.inconclusive and est.modes_used == 0
        assert est.sigma_fit == pytest.approx(clean.sigma_fit, rel=1e-6)

    def test_constant_field(self, g64):
        est = analyticity_radius(g64, np.full(64, 2.0))
        assert est.inconclusive and est.sigma_fit == math.inf

    def test_mode_amplitudes_cos(self, g64):
        amp = mode_amplitudes(g64, np.cos(3 * g64.x))
        assert amp.shape == (33,)
        assert amp[3] == pytest.approx(0.5) and np.delete(amp, 3).max() < 1e-15

    def test_steady_track_is_constant(self, g64):
        traj = evolve(make_state("steady", g64), SolverConfig(dt=0.1, t_end=0.5))
        track = radius_track(traj.states)
        assert len({(r.n.sigma_fit, r.v.sigma_fit) for r in track}) == 1

    def test_analytic_preset_track(self):
        g = Grid(1, 256)
        traj = evolve(make_state("analytic", g), SolverConfig(dt=1e-3, t_end=0.5, stride=50))
        track = radius_track(traj.states)
        assert len(track) == 11
        for r in track:
            assert r.n.sigma_fit > 0 and r.v.sigma_fit > 0
        # fitted decay is only meaningful once the data has spread over enough modes
        fitted = [r for r in track[1:] if not (r.n.inconclusive or r.v.inconclusive)]
        assert len(fitted) >= 3
        for a, b in zip(fitted, fitted[1:]):
            for x, y in ((a.n, b.n), (a.v, b.v)):
                assert abs(y.sigma_fit - x.sigma_fit) <= 0.5 * x.sigma_fit
