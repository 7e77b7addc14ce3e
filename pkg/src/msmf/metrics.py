"""Error measures against an analytic manifold and the unweighted baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimator import EstimateResult, SpatialIndex, _weighted_mean
from .geometry import AnalyticManifold, frames, mean_curvature_vector, project
from .kernel import KernelConfig
from .sampling import PointCloud


@dataclass(frozen=True)
class ErrorReport:
    manifold: str
    sigma: float
    n: int
    n0: int
    seed: int
    c_d: float
    r: float
    sup_error: float
    mean_normal_bias: float
    predicted_bias: float
    mean_tangential: float
    empty_queries: int
    runtime_ms: int
    trials: int = 1

    def __post_init__(self):
        if self.sup_error < 0 or self.trials < 1:
            raise ValueError("invalid error report")


def _points(points):
    if isinstance(points, PointCloud):
        return points.points
    return np.atleast_2d(np.asarray(points, dtype=float))


def sup_distance_to_manifold(points, m: AnalyticManifold) -> float:
    """max_i ||p_i - pi(p_i)||, the one-sided Hausdorff distance to ``m``."""
    pts = _points(points)
    if pts.shape[0] == 0:
        return 0.0
    return float(np.max(np.linalg.norm(pts - project(m, pts), axis=1)))


def coverage_distance(dense, output, chunk=4096) -> float:
    """max over a dense manifold sample of the distance to the output set."""
    a, b = _points(dense), _points(output)
    best = 0.0
    for i in range(0, a.shape[0], chunk):
        blk = a[i:i + chunk]
        d2 = np.sum(blk**2, axis=1)[:, None] - 2 * blk @ b.T + np.sum(b**2, axis=1)[None]
        best = max(best, float(np.sqrt(np.maximum(d2.min(axis=1), 0.0)).max()))
    return best


def bias_decomposition(m: AnalyticManifold, z, Fz, sigma: float):
    """Split F(z) - pi(z) along the mean curvature direction and the tangent space.

    Returns ``(normal_signed, tangential, predicted)``: the component of the
    error along H / |H| (positive toward the centre of curvature), the norm
    of its tangential part, and (d/2) |H| sigma^2.  Where H vanishes the
    signed component is reported as 0.
    """
    z = np.asarray(z, dtype=float)
    Fz = np.asarray(Fz, dtype=float)
    single = z.ndim == 1
    zb, Fb = np.atleast_2d(z), np.atleast_2d(Fz)
    base = project(m, zb)
    H = mean_curvature_vector(m, base)
    e = Fb - base
    hn = np.linalg.norm(H, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        hhat = np.where(hn[:, None] > 0, H / hn[:, None], 0.0)
    normal = np.einsum("nd,nd->n", e, hhat)
    T, _ = frames(m, base)
    tangential = np.linalg.norm(np.einsum("nkd,nd->nk", T, e), axis=1)
    predicted = m.intrinsic_dim / 2 * hn * sigma**2
    if single:
        return float(normal[0]), float(tangential[0]), float(predicted[0])
    return normal, tangential, predicted


def loglog_slope(pairs) -> float:
    """Least-squares slope of log y against log x."""
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 3:
        raise ValueError("need at least three (x, y) pairs")
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise ValueError("log-log slope needs positive finite values")
    lx, ly = np.log(arr[:, 0]), np.log(arr[:, 1])
    lx = lx - lx.mean()
    return float(np.dot(lx, ly - ly.mean()) / np.dot(lx, lx))


def baseline_unweighted(idx: SpatialIndex, z, cfg: KernelConfig) -> EstimateResult:
    """Plain average of the observations in the kernel support."""
    Fz, count, _ = _weighted_mean(idx, z, cfg, np.ones_like)
    return EstimateResult(np.asarray(z, dtype=float), Fz, count, float(count))


def summarize(m: AnalyticManifold, sigma: float, results, skip_bias=False):
    """(sup_error, mean normal bias, predicted bias, mean tangential, empty count)."""
    ok = [r for r in results if r.ok]
    empty = len(results) - len(ok)
    if not ok:
        return math.nan, math.nan, math.nan, math.nan, empty
    Z = np.array([r.z for r in ok])
    F = np.array([r.Fz for r in ok])
    sup = sup_distance_to_manifold(F, m)
    if skip_bias:
        return sup, math.nan, math.nan, math.nan, empty
    nrm, tan, pred = bias_decomposition(m, Z, F, sigma)
    return sup, math.fsum(nrm) / len(ok), math.fsum(pred) / len(ok), math.fsum(tan) / len(ok), empty
