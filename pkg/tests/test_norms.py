import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate

from vortexlab.norms import (WaveSpec, bump, bump_cdf, gevrey_norm_estimate, overlap_d,
                             phi_star, phi_star2, phi_zero, varpi, y_norm, zeta)

reals = st.floats(-30.0, 30.0, allow_nan=False)


@given(k=st.integers(-40, 40).filter(lambda k: k != 0))
def test_wavespec_rates(k):
    s = WaveSpec(k)
    kk = abs(k)
    assert s.mu > kk
    assert s.kappa == min(kk, 5)
    if kk >= 2:
        assert s.mu < s.mu_star <= kk + 2
    else:
        assert s.mu == 3.0 and s.mu_star == 3.0


def test_wavespec_rejects_bad_input():
    with pytest.raises(ValueError):
        WaveSpec(0)
    with pytest.raises(ValueError):
        WaveSpec(2, k_dagger=4)


def test_overlap_examples():
    assert overlap_d(-10.0, -8.0, -3.0) == 5.0
    assert overlap_d(5.0, 1.0, 2.0) == 0.0
    assert overlap_d(-4.0, -6.0, 1.0) == 4.0


@given(w=reals, v=reals, rho=reals)
def test_overlap_symmetric_and_bounded(w, v, rho):
    d = overlap_d(w, v, rho)
    assert d == overlap_d(w, rho, v)
    assert 0.0 <= d <= min(abs(v - rho), abs(min(w, 0.0))) + 1e-12


def test_varpi_examples():
    assert varpi(2, -3.0, 1.5, 1.5) == 1.0
    assert varpi(2, 5.0, 0.0, 1.0) == pytest.approx(np.exp(-2.0), rel=1e-15)
    # mu_2 = sqrt(12): e^{-20 - (sqrt(12) - 2) 10}
    assert np.log(varpi(2, -10.0, -10.0, 0.0)) == pytest.approx(-34.641016151377546, rel=1e-14)


@given(k=st.integers(1, 6), w=reals, v=reals, rho=reals, sigma=reals)
def test_zeta_multiplicative(k, w, v, rho, sigma):
    lhs = zeta(k, w, v, rho)
    rhs = zeta(k, w, v, sigma) * zeta(k, w, sigma, rho)
    assert lhs <= rhs * (1 + 1e-12)


@given(k=st.integers(1, 6), w=reals, v=reals, rho=reals)
def test_varpi_range(k, w, v, rho):
    val = varpi(k, w, v, rho)
    assert 0.0 <= val <= 1.0
    if v == rho:
        assert val == 1.0
    else:
        assume(abs(v - rho) > 1e-6)
        assert val < 1.0


def test_y_norm_zero_and_homogeneity():
    v = np.linspace(-6.0, 6.0, 12 * 32 + 1)
    assert y_norm(np.zeros_like(v), v, 2, 1) == 0.0
    h = np.exp(-v * v) * np.cos(v)
    assert y_norm(2 * h, v, 2, 1) == pytest.approx(2 * y_norm(h, v, 2, 1), rel=1e-14)


def test_y_norm_against_quadrature():
    # h = e^{-v} on [0, 2], k = k* = 1: the weighted function is 1 and its
    # weighted derivative is -1 on the dominant window [0, 2]
    v = np.linspace(0.0, 2.0, 2 * 512 + 1)
    h = np.exp(-np.abs(v))
    a, _ = integrate.quad(lambda x: (np.exp(x) * np.exp(-x)) ** 2, 0.0, 2.0)
    b, _ = integrate.quad(lambda x: (np.exp(x) * -np.exp(-x)) ** 2, 0.0, 2.0)
    ref = np.sqrt(a) + np.sqrt(b)
    assert ref == pytest.approx(2 * np.sqrt(2.0), rel=1e-14)
    assert y_norm(h, v, 1, 1) == pytest.approx(ref, rel=1e-5)


def test_y_norm_grid_too_coarse():
    v = np.linspace(-4.0, 4.0, 9)
    with pytest.raises(ValueError):
        y_norm(np.ones_like(v), v, 1, 1)


def test_gevrey_estimate_properties():
    v = np.linspace(-8.0, 8.0, 16 * 32 + 1)
    assert gevrey_norm_estimate(np.zeros_like(v), v) == 0.0
    h = np.exp(-0.5 * v * v)
    vals = [gevrey_norm_estimate(h, v, delta=d, window=(-6, 6)) for d in (0.0, 0.05, 0.1, 0.2)]
    assert np.all(np.diff(vals) > 0)
    v2 = np.linspace(-8.0, 8.0, 16 * 64 + 1)
    fine = gevrey_norm_estimate(np.exp(-0.5 * v2 * v2), v2, delta=0.1, window=(-6, 6))
    assert abs(fine / vals[2] - 1.0) < 0.1
    with pytest.raises(ValueError):
        gevrey_norm_estimate(h, v, window=(-9.0, 0.0))


def test_gevrey_zero_delta_is_tapered_l2():
    v = np.linspace(-6.0, 6.0, 12 * 64 + 1)
    h = np.exp(-v * v)
    val = gevrey_norm_estimate(h, v, delta=0.0, taper=False)
    assert val == pytest.approx(np.sum(h * h) * (v[1] - v[0]), rel=1e-12)


def test_bump_unit_mass_and_cdf():
    mass, _ = integrate.quad(bump, -1.0, 1.0, epsabs=1e-14)
    assert mass == pytest.approx(1.0, rel=1e-12)
    assert bump_cdf(-1.0) == 0.0
    assert bump_cdf(1.0) == 1.0
    assert bump_cdf(0.0) == pytest.approx(0.5, abs=1e-10)
    x = np.linspace(-1.5, 1.5, 301)
    assert np.all(np.diff(bump_cdf(x)) >= 0)
    x = np.linspace(-0.9, 0.9, 181)
    assert np.all(np.diff(bump_cdf(x)) > 0)


def test_cutoff_supports():
    v = np.linspace(-8.0, 8.0, 1601)
    p0 = phi_zero(v)
    assert np.all(p0[v <= -2] == 1.0) and np.all(p0[v >= -1] == 0.0)
    ps = phi_star(v)
    assert np.allclose(ps[np.abs(v) <= 2], 1.0, atol=1e-13)
    assert np.all(ps[np.abs(v) >= 4] == 0.0)
    ps2 = phi_star2(v)
    assert np.allclose(ps2[np.abs(v) <= 4], 1.0, atol=1e-13)
    assert np.all(ps2[np.abs(v) >= 5] == 0.0)


def test_phi_zero_derivatives_by_differences():
    v = np.linspace(-2.2, -0.8, 1401)
    h = v[1] - v[0]
    p = phi_zero(v)
    d1 = np.gradient(p, h)
    d2 = np.gradient(d1, h)
    assert np.max(np.abs(d1 - phi_zero(v, 1))) < 1e-3 * np.max(np.abs(d1))
    inner = slice(5, -5)
    assert np.max(np.abs(d2[inner] - phi_zero(v, 2)[inner])) < 1e-2 * np.max(np.abs(d2))
