from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from convqft.fields import (
    SIGMA_FAMILIES,
    BandError,
    FieldVector,
    GaugeQuadrature,
    GaussianMeasure,
    MomentumGrid,
    RegularizedPropagator,
    characteristic_function,
    convolve_measures,
    free_action_momentum,
    free_action_position,
    gauge_partition,
    moment_series_oracle,
    perturbative_partition,
    real_modes,
    sample,
    split_action,
    wick_correlator,
)


def brute_action(phi: FieldVector) -> float:
    """Sum over x, y of the lattice kernel built from finite differences."""
    n, m = phi.grid.n, phi.grid.mass
    f = phi.position().real
    # p^2 is (2 pi j / N)^2 here, not the lattice Laplacian, so go through the DFT explicitly
    F = np.fft.fft(f) / n  # F[k] = phi~ at momentum 2 pi k / N
    total = 0.0
    for k in range(n):
        j = k if k <= n // 2 else k - n
        p = 2 * np.pi * j / n
        total += (p * p + m * m) * abs(F[k]) ** 2
    return total


class TestGrid:
    def test_modes(self):
        g = MomentumGrid(4)
        assert list(g.indices) == [-1, 0, 1, 2]
        assert g.self_conjugate().tolist() == [False, True, False, True]
        assert [g.pos(j) for j in (-1, 0, 1, 2, -2, 3)] == [0, 1, 2, 3, 3, 0]

    def test_odd_rejected(self):
        with pytest.raises(ValueError):
            MomentumGrid(5)

    def test_reality(self):
        g = MomentumGrid(4)
        with pytest.raises(ValueError, match="reality"):
            FieldVector(g, [1j, 0, 0, 0])
        FieldVector(g, [1j, 0, 0, 0], real=False)


class TestFreeAction:
    def test_zero(self):
        g = MomentumGrid(8)
        z = FieldVector.zeros(g)
        assert free_action_position(z) == 0
        assert free_action_momentum(z, RegularizedPropagator.full(g)) == 0

    @pytest.mark.parametrize("j", [1, 2, 3])
    def test_single_mode(self, j):
        g = MomentumGrid(8)
        phi = FieldVector.modes(g, {j: 1.0})
        p = 2 * math.pi * j / 8
        expect = 2 * (p * p + 1)
        assert free_action_momentum(phi, RegularizedPropagator.full(g)) == pytest.approx(expect, rel=1e-14)
        assert free_action_position(phi) == pytest.approx(expect, rel=1e-12)

    @pytest.mark.parametrize("n", [4, 8, 16])
    def test_position_equals_momentum(self, n):
        g = MomentumGrid(n, mass=0.7)
        rng = np.random.default_rng(n)
        full = RegularizedPropagator.full(g)
        for _ in range(20):
            phi = FieldVector.random(g, rng)
            a, b = free_action_position(phi), free_action_momentum(phi, full)
            assert abs(a - b) <= 1e-10 * max(1, abs(b))
            assert brute_action(phi) == pytest.approx(b, rel=1e-10)

    def test_band_violation(self):
        g = MomentumGrid(8)
        low = RegularizedPropagator.sharp(g, 0, 1)
        with pytest.raises(BandError, match="mode outside regularization band"):
            free_action_momentum(FieldVector.modes(g, {3: 1}), low)

    def test_support_lemma(self):
        g = MomentumGrid(8)
        prop = RegularizedPropagator.full(g)
        phi = FieldVector.modes(g, {1: 0.3 + 0.2j})
        eta = FieldVector.modes(g, {2: -0.5 + 0.1j, 4: 0.7})
        s = split_action(phi, eta, prop)
        assert s.compatible and s.additive
        clash = FieldVector.modes(g, {1: 0.1})
        s2 = split_action(phi, clash, prop)
        assert not s2.compatible and not s2.additive


class TestMeasures:
    def test_point_mass_unit(self):
        g = MomentumGrid(8)
        mu = RegularizedPropagator.full(g).measure()
        assert np.array_equal(convolve_measures(mu, GaussianMeasure.point_mass(g)).covariance, mu.covariance)

    @pytest.mark.parametrize("cut", [0.5, 1.0, 2.0, math.pi])
    def test_sharp_bands_compose_exactly(self, cut):
        g = MomentumGrid(16)
        low = RegularizedPropagator.sharp(g, 0, cut)
        mid = RegularizedPropagator.sharp(g, cut, cut + 0.6)
        top = RegularizedPropagator.sharp(g, cut + 0.6, math.inf)
        conv = convolve_measures(convolve_measures(low.measure(), mid.measure()), top.measure())
        assert np.array_equal(conv.covariance, RegularizedPropagator.full(g).weights)
        assert not np.any(low.support & mid.support)

    def test_smooth_profiles_compose(self):
        g = MomentumGrid(16)
        low = RegularizedPropagator.smooth(g, 0, 1.3)
        shell = RegularizedPropagator.smooth(g, 1.3, math.inf)
        conv = convolve_measures(low.measure(), shell.measure())
        assert np.allclose(conv.covariance, RegularizedPropagator.full(g).weights, rtol=1e-15, atol=0)

    def test_characteristic_function(self):
        g = MomentumGrid(8)
        mu = RegularizedPropagator.sharp(g, 0, 2).measure()
        assert characteristic_function(mu, FieldVector.zeros(g)) == 1
        J = FieldVector.modes(g, {1: 0.4 - 0.3j})
        p = 2 * math.pi / 8
        expect = math.exp(-0.5 * 2 * 0.25 / (p * p + 1))
        assert characteristic_function(mu, J) == pytest.approx(expect, rel=1e-14)

    def test_characteristic_functions_multiply(self):
        g = MomentumGrid(16)
        rng = np.random.default_rng(3)
        a = RegularizedPropagator.sharp(g, 0, 1).measure()
        b = RegularizedPropagator.sharp(g, 1, math.inf).measure()
        ab = convolve_measures(a, b)
        for _ in range(50):
            J = FieldVector.random(g, rng)
            lhs = characteristic_function(ab, J)
            rhs = characteristic_function(a, J) * characteristic_function(b, J)
            assert abs(lhs - rhs) < 1e-12

    def test_asymmetric_covariance_rejected(self):
        g = MomentumGrid(4)
        with pytest.raises(ValueError):
            GaussianMeasure(g, [1.0, 1.0, 2.0, 1.0])


class TestSampling:
    def test_zero_covariance(self):
        g = MomentumGrid(4)
        assert not np.any(sample(GaussianMeasure.point_mass(g), 1, 10))

    def test_deterministic_and_worker_independent(self):
        mu = RegularizedPropagator.full(MomentumGrid(8)).measure()
        a = sample(mu, 5, 10000)
        assert np.array_equal(a, sample(mu, 5, 10000))
        assert np.array_equal(a, sample(mu, 5, 10000, workers=3))
        assert not np.array_equal(a, sample(mu, 6, 10000))

    def test_real_fields(self):
        g = MomentumGrid(8)
        d = sample(RegularizedPropagator.full(g).measure(), 0, 100)
        assert np.allclose(d[:, g.neg()], np.conj(d))

    def test_second_moments(self):
        g = MomentumGrid(8)
        mu = RegularizedPropagator.full(g).measure()
        d = sample(mu, 11, 100_000)
        neg = g.neg()
        for pos in range(g.n):
            x = (d[:, pos] * d[:, neg[pos]]).real
            se = x.std(ddof=1) / math.sqrt(len(x))
            assert abs(x.mean() - mu.covariance[pos]) < 5 * se


class TestWick:
    def test_two_point(self):
        g = MomentumGrid(8)
        mu = RegularizedPropagator.full(g).measure()
        assert wick_correlator(mu, [2, -2]) == mu.covariance[g.pos(2)]
        assert wick_correlator(mu, [1, 2, 3]) == 0

    def test_four_point_real_mode(self):
        g = MomentumGrid(8)
        mu = RegularizedPropagator.full(g).measure()
        w = mu.covariance[g.pos(0)]
        assert wick_correlator(mu, [0, 0, 0, 0]) == pytest.approx(3 * w * w, rel=1e-15)
        wn = mu.covariance[g.pos(4)]
        assert wick_correlator(mu, [4, 4, 4, 4]) == pytest.approx(3 * wn * wn, rel=1e-15)

    def test_four_point_complex_pair(self):
        # only the two (p, -p) pairings survive
        g = MomentumGrid(8)
        mu = RegularizedPropagator.full(g).measure()
        w = mu.covariance[g.pos(1)]
        assert wick_correlator(mu, [1, -1, 1, -1]) == pytest.approx(2 * w * w, rel=1e-15)

    def test_four_point_against_samples(self):
        g = MomentumGrid(4)
        mu = RegularizedPropagator.full(g).measure()
        d = sample(mu, 2, 200_000)
        x = (d[:, g.pos(1)] * d[:, g.pos(-1)]) ** 2
        se = x.real.std(ddof=1) / math.sqrt(len(x))
        assert abs(x.real.mean() - wick_correlator(mu, [1, -1, 1, -1])) < 5 * se


class TestPartitionSeries:
    def test_low_orders(self):
        assert perturbative_partition(0).coeffs == (1,)
        assert perturbative_partition(1).coeffs == (1, -3)
        assert perturbative_partition(2).coeffs == (1, -3, Fraction(105, 2))

    def test_against_pairing_count(self):
        assert perturbative_partition(6) == moment_series_oracle(6)

    def test_against_quadrature(self):
        from scipy import integrate

        g = 1e-4
        exact, _ = integrate.quad(lambda x: math.exp(-x * x / 2 - g * x**4) / math.sqrt(2 * math.pi), -40, 40)
        assert perturbative_partition(3)(g) == pytest.approx(exact, abs=1e-11)

    def test_order_limit(self):
        with pytest.raises(ValueError):
            perturbative_partition(7)


def test_real_modes_reproduce_covariance():
    g = MomentumGrid(8)
    prop = RegularizedPropagator.sharp(g, 0, 2)
    rm = real_modes(prop)
    cov_x = rm.basis @ np.diag(rm.variance) @ rm.basis.T
    d = sample(prop.measure(), 0, 1)
    assert rm.dim == int(prop.support.sum())
    # position covariance from the spectral weights
    x = np.arange(g.n)
    lag = x[:, None] - x[None, :]
    direct = np.real(np.exp(1j * lag[..., None] * g.momenta) @ prop.weights)
    assert np.allclose(cov_x, direct, atol=1e-13)
    assert d.shape == (1, g.n)


class TestGauge:
    def test_identity(self):
        r = gauge_partition("identity")
        assert r.deviation < 1e-14 and r.det_preserving

    def test_rotation(self):
        r = gauge_partition("rotation", GaugeQuadrature(adaptive=False))
        assert r.deviation < 1e-10

    def test_unimodular(self):
        assert gauge_partition("unimodular-diag").deviation < 1e-8

    def test_closed_form(self):
        r = gauge_partition("rotation")
        zm = 2 * math.pi / math.sqrt(2.0)
        zg = math.sqrt(2 * math.pi)
        assert r.z_matter == pytest.approx(zm, rel=1e-14)
        assert r.z_gauge == pytest.approx(zg, rel=1e-14)

    def test_scaling_flagged(self):
        r = gauge_partition("scaling")
        assert not r.det_preserving and r.warnings

    def test_families(self):
        assert set(SIGMA_FAMILIES) >= {"identity", "rotation", "unimodular-diag", "scaling"}


@given(st.integers(1, 8).map(lambda k: 2 * k), st.integers(0, 2**31))
def test_position_momentum_property(n, seed):
    g = MomentumGrid(n)
    phi = FieldVector.random(g, np.random.default_rng(seed))
    b = free_action_momentum(phi, RegularizedPropagator.full(g))
    assert abs(free_action_position(phi) - b) <= 1e-10 * max(1, b)
