import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from msmf.kernel import (
    Cutoff,
    KernelConfig,
    bandwidth_constant,
    chi,
    kernel_weight,
    log_kernel_weight,
    lower_incomplete_gamma,
    regularized_lower_gamma,
)


def moments_by_quadrature(D, profile=lambda t: 1.0):
    """A and B on the unit ball by radial quad of the kernel e^{-|u|^2}.

    B is the second moment of one coordinate, |u|^2 / D by symmetry.  The
    common (2 pi)^{-D/2} and sphere-area factors cancel in A / 2B.
    """
    a = integrate.quad(lambda t: math.exp(-t * t) * profile(t) * t ** (D - 1), 0, 1,
                       epsabs=0, epsrel=1e-13, limit=200)[0]
    b = integrate.quad(lambda t: math.exp(-t * t) * profile(t) * t ** (D + 1), 0, 1,
                       epsabs=0, epsrel=1e-13, limit=200)[0] / D
    return a, b


# ---------------------------------------------------------- incomplete gamma


@pytest.mark.parametrize("s,x,expected", [
    (1.0, 1.0, 0.632120558829),
    (2.0, 1.0, 0.264241117657),
    (0.5, 1.0, 1.493648265625),
])
def test_gamma_frozen_values(s, x, expected):
    assert lower_incomplete_gamma(s, x) == pytest.approx(expected, abs=1e-12)


def test_gamma_half_against_quadrature():
    val = 2 * integrate.quad(lambda u: math.exp(-u * u), 0, 1, epsabs=0, epsrel=1e-13)[0]
    assert lower_incomplete_gamma(0.5, 1.0) == pytest.approx(val, rel=1e-13)
    assert lower_incomplete_gamma(0.5, 1.0) == pytest.approx(math.sqrt(math.pi) * math.erf(1), rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 40), st.floats(0, 80))
def test_gamma_matches_scipy(s, x):
    ref = special.gammainc(s, x) * special.gamma(s)
    assert lower_incomplete_gamma(s, x) == pytest.approx(ref, rel=1e-11, abs=1e-300)
    assert regularized_lower_gamma(s, x) == pytest.approx(special.gammainc(s, x), rel=1e-11, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 20), st.floats(0.01, 30))
def test_gamma_recurrence(s, x):
    lhs = lower_incomplete_gamma(s + 1, x)
    rhs = s * lower_incomplete_gamma(s, x) - x**s * math.exp(-x)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12 * math.gamma(s + 1))


@pytest.mark.parametrize("s,x", [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.1)])
def test_gamma_domain(s, x):
    with pytest.raises(ValueError):
        lower_incomplete_gamma(s, x)


# ------------------------------------------------------- bandwidth constant


def test_bandwidth_constant_frozen():
    assert bandwidth_constant(1) == pytest.approx(1.40385, abs=1e-5)
    assert bandwidth_constant(2) == pytest.approx(1.5466775, abs=1e-6)
    assert bandwidth_constant(2) == pytest.approx(math.sqrt((1 - math.exp(-1)) / (1 - 2 * math.exp(-1))), rel=1e-14)
    assert bandwidth_constant(3) == pytest.approx(1.68359, abs=1e-5)


@pytest.mark.parametrize("D", range(1, 11))
def test_bandwidth_constant_against_radial_quadrature(D):
    a, b = moments_by_quadrature(D)
    assert bandwidth_constant(D) == pytest.approx(math.sqrt(a / (2 * b)), rel=1e-10)


def test_bandwidth_constant_against_cartesian_quadrature():
    # D = 2 and 3 without the radial reduction
    def box(f, D):
        if D == 2:
            return integrate.dblquad(lambda y, x: f(np.array([x, y])), -1, 1,
                                     lambda x: -math.sqrt(1 - x * x), lambda x: math.sqrt(1 - x * x),
                                     epsabs=1e-12, epsrel=1e-11)[0]
        return integrate.tplquad(
            lambda zz, y, x: f(np.array([x, y, zz])), -1, 1,
            lambda x: -math.sqrt(1 - x * x), lambda x: math.sqrt(1 - x * x),
            lambda x, y: -math.sqrt(max(1 - x * x - y * y, 0.0)),
            lambda x, y: math.sqrt(max(1 - x * x - y * y, 0.0)),
            epsabs=1e-10, epsrel=1e-9)[0]

    for D in (2, 3):
        A = box(lambda u: math.exp(-u @ u), D)
        B = box(lambda u: math.exp(-u @ u) * u[0] ** 2, D)
        assert bandwidth_constant(D) == pytest.approx(math.sqrt(A / (2 * B)), rel=1e-6)


@pytest.mark.parametrize("D", range(1, 11))
def test_moment_identity(D):
    a, b = moments_by_quadrature(D)
    c = bandwidth_constant(D)
    assert 2 * b * c * c / a == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("D", [1, 2, 3, 5])
def test_smooth_bandwidth_constant(D):
    a, b = moments_by_quadrature(D, lambda t: float(chi(t, 0.9)))
    assert bandwidth_constant(D, Cutoff.SMOOTH, 0.9) == pytest.approx(math.sqrt(a / (2 * b)), rel=1e-8)
    # the bump removes mass near the rim, which raises A / 2B
    assert bandwidth_constant(D, Cutoff.SMOOTH, 0.9) > bandwidth_constant(D)


def test_bandwidth_constant_fast():
    import time

    t0 = time.perf_counter()
    for D in range(1, 11):
        bandwidth_constant(D)
    assert time.perf_counter() - t0 < 1.0


def test_bandwidth_constant_rejects_bad_dim():
    with pytest.raises(ValueError):
        bandwidth_constant(0)


# ---------------------------------------------------------------- kernel


def test_kernel_weight_examples():
    cfg2 = KernelConfig(1 / bandwidth_constant(2), 2)
    assert cfg2.r == pytest.approx(1.0)
    assert kernel_weight([0.0, 0.0], cfg2) == pytest.approx(1 / (2 * math.pi), rel=1e-12)
    assert kernel_weight([1.5 * math.sqrt(2), 0.0], cfg2) == 0.0
    cfg1 = KernelConfig(1 / bandwidth_constant(1), 1)
    assert kernel_weight([1.0], cfg1) == pytest.approx(0.24197072451914337, rel=1e-12)


def test_kernel_support_boundary():
    cfg = KernelConfig(0.1, 2)
    rho = cfg.support_radius
    assert kernel_weight([rho * (1 - 1e-12), 0.0], cfg) > 0
    assert kernel_weight([rho * (1 + 1e-12), 0.0], cfg) == 0.0


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6), st.floats(0.01, 1.0), st.integers(0, 2**32 - 1))
def test_kernel_rotation_invariant(D, sigma, seed):
    rng = np.random.default_rng(seed)
    cfg = KernelConfig(sigma, D)
    diff = rng.standard_normal((20, D)) * cfg.r
    Q, _ = np.linalg.qr(rng.standard_normal((D, D)))
    np.testing.assert_allclose(kernel_weight(diff @ Q.T, cfg), kernel_weight(diff, cfg), rtol=1e-12, atol=0)


def test_log_kernel_weight_consistent():
    cfg = KernelConfig(0.2, 3)
    sq = np.linspace(0, 2.2, 50) * cfg.r**2
    w = kernel_weight(np.stack([np.sqrt(sq), 0 * sq, 0 * sq], axis=1), cfg)
    lw = log_kernel_weight(sq, cfg)
    inside = w > 0
    np.testing.assert_allclose(np.exp(lw[inside]), w[inside], rtol=1e-12)
    assert np.all(np.isneginf(lw[~inside]))


def test_chi_properties():
    t = np.linspace(0, 1.2, 1201)
    c = chi(t, 0.9)
    assert np.all(c[t <= 0.9] == 1.0)
    assert np.all(c[t >= 1.0] == 0.0)
    assert np.all(np.diff(c) <= 0)
    # numerically C^1: bounded difference quotients, flat at both joins
    assert np.abs(np.diff(c) / np.diff(t)).max() < 30
    assert (1 - chi(0.9 + 1e-5, 0.9)) / 1e-5 < 1e-2
    assert chi(1 - 1e-3, 0.9) < 1e-20


def test_kernel_config_validation():
    with pytest.raises(ValueError):
        KernelConfig(0.0, 2)
    with pytest.raises(ValueError):
        KernelConfig(0.1, 2, Cutoff.SMOOTH, 1.0)
    assert KernelConfig(0.1, 2, "smooth").cutoff is Cutoff.SMOOTH
