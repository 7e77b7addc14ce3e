import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msmf import geometry as geo
from msmf.estimator import EstimateResult, build_index, default_index, estimate_batch
from msmf.kernel import KernelConfig
from msmf.metrics import (
    ErrorReport,
    baseline_unweighted,
    bias_decomposition,
    coverage_distance,
    loglog_slope,
    summarize,
    sup_distance_to_manifold,
)
from msmf.sampling import NoiseConfig, add_noise, sample_test_points, sample_uniform

CIRCLE = geo.circle(10.0)
TORUS = geo.torus(2.0, 1.0)


# ----------------------------------------------------------- sup distance


def test_sup_distance_examples():
    on = sample_uniform(CIRCLE, 100, 0).points
    assert sup_distance_to_manifold(on, CIRCLE) < 1e-10
    assert sup_distance_to_manifold([[10.3, 0.0]], CIRCLE) == pytest.approx(0.3)
    assert sup_distance_to_manifold(np.zeros((0, 2)), CIRCLE) == 0.0


def test_sup_distance_against_dense_sample():
    rng = np.random.default_rng(1)
    pts = sample_test_points(TORUS, NoiseConfig(0.1), 50, 1).points + rng.normal(size=(50, 3)) * 0.02
    n = 1000
    th = np.linspace(-np.pi, np.pi, n, endpoint=False)
    T, P = np.meshgrid(th, th, indexing="ij")
    dense = geo.embed(TORUS, np.stack([T, P], axis=-1)).reshape(-1, 3)
    gap = (TORUS.major + TORUS.minor) * 2 * np.pi / n
    brute = max(np.sqrt(np.min(np.sum((dense - p) ** 2, axis=1))) for p in pts)
    got = sup_distance_to_manifold(pts, TORUS)
    assert got <= brute + 1e-12
    assert brute - got <= 2 * gap


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(1, 40))
def test_sup_distance_permutation_and_union(seed, n1, n2):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n1, 2)) * 0.5 + [10.0, 0.0]
    b = rng.normal(size=(n2, 2)) * 0.5 + [0.0, 10.0]
    da = sup_distance_to_manifold(a, CIRCLE)
    assert sup_distance_to_manifold(a[rng.permutation(n1)], CIRCLE) == da
    both = sup_distance_to_manifold(np.concatenate([a, b]), CIRCLE)
    assert both >= da
    assert both == max(da, sup_distance_to_manifold(b, CIRCLE))


def test_coverage_distance():
    dense = np.array([[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]])
    out = np.array([[0.0, 0.0], [1.0, 0.5]])
    assert coverage_distance(dense, out) == pytest.approx(math.hypot(2.0, 0.5))
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=(5000, 3)), rng.normal(size=(300, 3))
    brute = np.sqrt(((a[:, None] - b[None]) ** 2).sum(-1).min(axis=1)).max()
    assert coverage_distance(a, b, chunk=777) == pytest.approx(brute, rel=1e-10)


# ------------------------------------------------------ bias decomposition


def test_bias_decomposition_trivial_cases():
    sigma = 0.1
    z = np.array([10.2, 0.0])
    pi = np.array([10.0, 0.0])
    assert bias_decomposition(CIRCLE, z, pi, sigma) == pytest.approx((0.0, 0.0, 5e-4))
    H = geo.mean_curvature_vector(CIRCLE, pi)
    n, t, p = bias_decomposition(CIRCLE, z, pi + 0.5 * H * sigma**2, sigma)
    assert n == pytest.approx(p)
    assert t == pytest.approx(0.0, abs=1e-18)


def test_bias_decomposition_splits_components():
    n, t, p = bias_decomposition(CIRCLE, [0.0, 9.9], [0.003, 9.998], 0.1)
    assert n == pytest.approx(0.002)
    assert t == pytest.approx(0.003)


def test_bias_decomposition_sphere_batch():
    m = geo.sphere(5.0)
    x = sample_uniform(m, 20, 3).points
    F = x * (1 - 2e-3 / 5)
    n, t, p = bias_decomposition(m, x * 1.01, F, 0.1)
    np.testing.assert_allclose(n, 2e-3, rtol=1e-9)
    np.testing.assert_allclose(t, 0.0, atol=1e-14)
    np.testing.assert_allclose(p, 2e-3, rtol=1e-12)


def test_bias_decomposition_quartic_unsupported():
    with pytest.raises(geo.Unsupported):
        bias_decomposition(geo.fermat_quartic(), [1.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], 0.05)


# --------------------------------------------------------------- log-log fit


def test_loglog_slope_examples():
    x = np.array([0.5, 0.3, 0.1, 0.08, 0.05])
    assert loglog_slope(list(zip(x, x**2))) == pytest.approx(2.0, abs=1e-12)
    assert loglog_slope(list(zip(x, np.full(5, 3.0)))) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(-4, 4), st.floats(0.01, 100))
def test_loglog_slope_power_laws(k, c):
    x = np.geomspace(0.01, 1.0, 6)
    assert loglog_slope(list(zip(x, c * x**k))) == pytest.approx(k, abs=1e-9)


@pytest.mark.parametrize("pairs", [[(1, 1), (2, 2)], [(1, 1), (2, 0), (3, 3)], [(1, 1), (-2, 2), (3, 3)]])
def test_loglog_slope_errors(pairs):
    with pytest.raises(ValueError):
        loglog_slope(pairs)


# ---------------------------------------------------------------- baseline


def test_baseline_trivial():
    cfg = KernelConfig(0.1, 2)
    one = build_index(np.array([[1.0, 1.0]]), cfg.support_radius)
    assert np.array_equal(baseline_unweighted(one, [1.05, 1.0], cfg).Fz, [1.0, 1.0])
    two = build_index(np.array([[0.0, 0.0], [0.1, 0.0]]), cfg.support_radius)
    np.testing.assert_allclose(baseline_unweighted(two, [0.01, 0.0], cfg).Fz, [0.05, 0.0], atol=1e-17)


def test_baseline_within_factor_two_of_kernel_estimator():
    sigma = 0.1
    cfg = KernelConfig(sigma, 2)
    cloud = add_noise(sample_uniform(CIRCLE, 30_000, 4), NoiseConfig(sigma), 4)
    test = sample_test_points(CIRCLE, NoiseConfig(sigma), 100, 4)
    idx = default_index(cloud, cfg)
    k = sup_distance_to_manifold([r.Fz for r in estimate_batch(idx, test, cfg)], CIRCLE)
    b = sup_distance_to_manifold([r.Fz for r in estimate_batch(idx, test, cfg, fn=baseline_unweighted)], CIRCLE)
    assert 0.5 * k <= b <= 2 * k


# ------------------------------------------------------------ summaries


def test_summarize_counts_and_means():
    z = np.array([[10.2, 0.0], [0.0, 9.9], [5.0, 5.0]])
    F = [np.array([10.0 - 5e-4, 0.0]), np.array([1e-3, 10.0 - 5e-4]), None]
    res = [EstimateResult(zz, f, 1 if f is not None else 0, 1.0) for zz, f in zip(z, F)]
    sup, nb, pb, tb, empty = summarize(CIRCLE, 0.1, res)
    assert empty == 1
    assert sup == pytest.approx(5e-4, rel=1e-9)
    assert nb == pytest.approx(5e-4, rel=1e-3)
    assert pb == pytest.approx(5e-4)
    assert tb == pytest.approx(5e-4, rel=1e-3)
    assert all(math.isnan(v) for v in summarize(CIRCLE, 0.1, res[2:])[:4])


def test_error_report_validation():
    kw = dict(manifold="c", sigma=0.1, n=1, n0=1, seed=0, c_d=1.0, r=0.1, sup_error=0.1,
              mean_normal_bias=0.0, predicted_bias=0.0, mean_tangential=0.0, empty_queries=0, runtime_ms=0)
    ErrorReport(**kw)
    with pytest.raises(ValueError):
        ErrorReport(**{**kw, "sup_error": -1.0})
    with pytest.raises(ValueError):
        ErrorReport(**kw, trials=0)
