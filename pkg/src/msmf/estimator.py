"""Single-step truncated-Gaussian mean shift over a hash-grid index."""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .kernel import Cutoff, KernelConfig, cutoff_profile
from .sampling import PointCloud


class EmptyNeighborhood(RuntimeError):
    """No observation lies within the kernel support around the query."""


@dataclass(frozen=True)
class SpatialIndex:
    """Uniform hash grid: integer cell coordinates -> ascending point indices."""

    points: np.ndarray
    cell_size: float
    cells: dict

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class EstimateResult:
    z: np.ndarray
    Fz: np.ndarray | None
    neighbor_count: int
    weight_sum: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.Fz is not None


def build_index(cloud, cell: float) -> SpatialIndex:
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    if pts.shape[0] == 0:
        raise ValueError("cannot index an empty cloud")
    if not cell > 0:
        raise ValueError("cell size must be positive")
    keys = np.floor(pts / cell).astype(np.int64)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(inverse, kind="stable")
    bounds = np.searchsorted(inverse[order], np.arange(uniq.shape[0] + 1))
    cells = {
        tuple(int(v) for v in key): order[bounds[i]:bounds[i + 1]]
        for i, key in enumerate(uniq)
    }
    return SpatialIndex(pts, float(cell), cells)


def radius_query(idx: SpatialIndex, z, rho: float) -> np.ndarray:
    """Indices j with ||y_j - z|| <= rho, ascending."""
    z = np.asarray(z, dtype=float)
    lo = np.floor((z - rho) / idx.cell_size).astype(np.int64)
    hi = np.floor((z + rho) / idx.cell_size).astype(np.int64)
    n_boxes = int(np.prod(hi - lo + 1))
    if n_boxes <= len(idx.cells):
        ranges = [range(a, b + 1) for a, b in zip(lo, hi)]
        found = [idx.cells.get(key) for key in itertools.product(*ranges)]
        found = [f for f in found if f is not None]
    else:
        found = [
            ids for key, ids in idx.cells.items()
            if all(a <= k <= b for k, a, b in zip(key, lo, hi))
        ]
    if not found:
        return np.empty(0, dtype=np.int64)
    cand = np.concatenate(found)
    diff = idx.points[cand] - z
    keep = cand[np.einsum("ij,ij->i", diff, diff) <= rho * rho]
    return np.sort(keep)


def default_index(cloud, cfg: KernelConfig) -> SpatialIndex:
    return build_index(cloud, cfg.support_radius)


def _weighted_mean(idx, z, cfg, weigh):
    z = np.asarray(z, dtype=float)
    nbr = radius_query(idx, z, cfg.support_radius)
    if nbr.size == 0:
        raise EmptyNeighborhood(f"no observations within {cfg.support_radius:.4g} of the query")
    y = idx.points[nbr]
    diff = y - z
    w = weigh(np.einsum("ij,ij->i", diff, diff))
    w = np.where(w < 1e-300, 0.0, w)
    total = math.fsum(w)
    if total <= 0.0:
        raise EmptyNeighborhood("all kernel weights vanish inside the support")
    # shift by z before summing: exact fsum of small offsets
    Fz = z + np.array([math.fsum(w * diff[:, k]) for k in range(diff.shape[1])]) / total
    return Fz, int(nbr.size), total


def estimate(idx: SpatialIndex, z, cfg: KernelConfig) -> EstimateResult:
    """F(z) = sum_j phi_r(y_j - z) y_j / sum_j phi_r(y_j - z) over the ball.

    Raises EmptyNeighborhood when no sample lies within sqrt(2) r.
    ``weight_sum`` is reported with the kernel normalization included.
    """
    r2 = cfg.r * cfg.r

    def weigh(sq):
        w = np.exp(-sq / (2 * r2))
        if cfg.cutoff is not Cutoff.HARD:
            w = w * cutoff_profile(np.sqrt(sq) / cfg.support_radius, cfg.cutoff, cfg.rho0)
        return w

    Fz, count, total = _weighted_mean(idx, z, cfg, weigh)
    norm = (2 * math.pi * r2) ** (-cfg.ambient_dim / 2)
    return EstimateResult(np.asarray(z, dtype=float), Fz, count, total * norm)


def resolve_workers(workers=None) -> int:
    if workers is None:
        workers = int(os.environ.get("MSMF_THREADS", "1") or 1)
    return max(1, int(workers))


def estimate_batch(idx: SpatialIndex, test, cfg: KernelConfig, workers=None, fn=estimate):
    """Apply ``fn`` to every test point, in input order.

    Empty neighbourhoods are recorded in the result (``Fz is None``) and do
    not stop the batch.  Each query is independent, so the output does not
    depend on the worker count.
    """
    pts = test.points if isinstance(test, PointCloud) else np.atleast_2d(np.asarray(test, dtype=float))

    def one(z):
        try:
            return fn(idx, z, cfg)
        except EmptyNeighborhood as exc:
            return EstimateResult(z, None, 0, 0.0, str(exc))

    workers = resolve_workers(workers)
    if workers == 1:
        return [one(z) for z in pts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, pts))
