"""Uniform manifold sampling, Gaussian corruption and point-cloud files."""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass

import numpy as np

from .geometry import AnalyticManifold, Kind, frames
from .kernel import bandwidth_constant


class Provenance(enum.Enum):
    LATENT = "latent"
    NOISY = "noisy"
    TEST = "test"


class PointCloudFormatError(ValueError):
    pass


class SigmaTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    provenance: Provenance = Provenance.LATENT
    seed: int = 0

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-D array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]


def rng_stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for ``(seed, *keys)``.

    Streams are derived with SeedSequence spawn keys, so any cell or trial
    can be regenerated alone, in any order, on any worker.
    """
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def sigma_max(m: AnalyticManifold, tube_const=2.0, eps=None) -> float:
    """sigma_0 = (tau - eps) / (C + sqrt(2) c_D), with eps = tau / 2 by default."""
    tau = m.reach
    eps = tau / 2 if eps is None else eps
    return (tau - eps) / (tube_const + math.sqrt(2) * bandwidth_constant(m.ambient_dim))


@dataclass(frozen=True)
class NoiseConfig:
    sigma: float
    tube_const: float = 2.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    def check(self, m: AnalyticManifold, eps=None):
        bound = sigma_max(m, self.tube_const, eps)
        if self.sigma > bound:
            raise SigmaTooLarge(
                f"sigma={self.sigma:g} exceeds sigma_0={bound:.4g} for {m.describe()}"
            )


# ---------------------------------------------------------------- sampling


def _sample_torus(m, n, rng):
    out = []
    need = n
    while need > 0:
        k = max(2 * need, 64)
        th = rng.uniform(-math.pi, math.pi, k)
        ph = rng.uniform(-math.pi, math.pi, k)
        # area element r (R + r cos th), normalized by its maximum
        accept = rng.uniform(size=k) * (m.major + m.minor) <= m.major + m.minor * np.cos(th)
        out.append(np.stack([th[accept], ph[accept]], axis=1)[:need])
        need -= out[-1].shape[0]
    params = np.concatenate(out)
    rr = m.major + m.minor * np.cos(params[:, 0])
    pts = np.zeros((n, m.ambient_dim))
    pts[:, 0] = rr * np.cos(params[:, 1])
    pts[:, 1] = rr * np.sin(params[:, 1])
    pts[:, 2] = m.minor * np.sin(params[:, 0])
    return pts


def _sample_quartic(m, n, rng):
    # Graph patch {|x| <= |y| <= b} over the x-disc, area factor 1 + |y'|^2 <= 2,
    # then one of 4 branches of y and a fair x <-> y swap.
    b = m.extent
    chunks = []
    need = n
    while need > 0:
        k = max(3 * need, 64)
        rho = b * np.sqrt(rng.uniform(size=k))
        x = rho * np.exp(1j * rng.uniform(0, 2 * math.pi, k))
        y = (1 - x**4) ** 0.25
        ya = np.abs(y)
        u = rng.uniform(size=k)
        branch = rng.integers(0, 4, k)
        swap = rng.integers(0, 2, k).astype(bool)
        with np.errstate(divide="ignore", invalid="ignore"):
            area = 1 + (rho / ya) ** 6
        ok = (rho <= ya) & (ya <= b) & (2 * u <= area)
        y = y * (1j ** branch)
        x, y, swap = x[ok], y[ok], swap[ok]
        x, y = np.where(swap, y, x), np.where(swap, x, y)
        chunks.append(np.stack([x.real, x.imag, y.real, y.imag], axis=1)[:need])
        need -= chunks[-1].shape[0]
    return np.concatenate(chunks)


def _sample_points(m, n, rng):
    D = m.ambient_dim
    if m.kind is Kind.CIRCLE:
        a = rng.uniform(0, 2 * math.pi, n)
        pts = np.zeros((n, D))
        pts[:, 0] = m.radius * np.cos(a)
        pts[:, 1] = m.radius * np.sin(a)
        return pts
    if m.kind is Kind.SPHERE:
        g = rng.standard_normal((n, 3))
        pts = np.zeros((n, D))
        pts[:, :3] = m.radius * g / np.linalg.norm(g, axis=1, keepdims=True)
        return pts
    if m.kind is Kind.TORUS:
        return _sample_torus(m, n, rng)
    return _sample_quartic(m, n, rng)


def sample_uniform(m: AnalyticManifold, n: int, seed: int, stream=()) -> PointCloud:
    """``n`` i.i.d. points uniform w.r.t. the induced volume of ``m``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    pts = _sample_points(m, n, rng_stream(seed, 0, *stream))
    return PointCloud(pts, Provenance.LATENT, seed)


def add_noise(cloud: PointCloud, cfg: NoiseConfig, seed: int, stream=()) -> PointCloud:
    """y = x + xi with xi ~ N(0, sigma^2 I_D)."""
    if cloud.provenance is not Provenance.LATENT:
        raise ValueError("noise is added to latent clouds only")
    rng = rng_stream(seed, 1, *stream)
    noise = rng.standard_normal(cloud.points.shape) * cfg.sigma
    return PointCloud(cloud.points + noise, Provenance.NOISY, seed)


def sample_test_points(m: AnalyticManifold, cfg: NoiseConfig, n0: int, seed: int,
                       stream=()) -> PointCloud:
    """Points x + s u with s ~ U[sigma/2, 2 sigma] and u a random unit normal."""
    if 2 * cfg.sigma >= m.reach:
        raise ValueError("test band 2*sigma must stay inside the reach")
    rng = rng_stream(seed, 2, *stream)
    x = _sample_points(m, n0, rng)
    s = rng.uniform(cfg.sigma / 2, 2 * cfg.sigma, n0)
    _, N = frames(m, x)
    coef = rng.standard_normal((n0, N.shape[1]))
    coef /= np.linalg.norm(coef, axis=1, keepdims=True)
    u = np.einsum("nk,nkd->nd", coef, N)
    return PointCloud(x + s[:, None] * u, Provenance.TEST, seed)


def sample_on_manifold_test_points(m: AnalyticManifold, n0: int, seed: int, stream=()) -> PointCloud:
    """Test points lying exactly on ``m`` (zero normal offset)."""
    rng = rng_stream(seed, 2, *stream)
    return PointCloud(_sample_points(m, n0, rng), Provenance.TEST, seed)


# -------------------------------------------------------------------- files


def write_point_cloud(path, points):
    pts = points.points if isinstance(points, PointCloud) else np.asarray(points, dtype=float)
    n, D = pts.shape
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# dim={D} count={n}\n")
        for row in pts:
            fh.write(" ".join(f"{v:.17g}" for v in row))
            fh.write("\n")
    os.replace(tmp, path)


def read_point_cloud(path, provenance=Provenance.NOISY) -> PointCloud:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        try:
            if header[0] != "#":
                raise ValueError
            meta = dict(item.split("=", 1) for item in header[1:])
            D, n = int(meta["dim"]), int(meta["count"])
        except (ValueError, KeyError, IndexError):
            raise PointCloudFormatError(f"{path}: bad header, expected '# dim=D count=N'")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                row = [float(tok) for tok in line.split(" ")]
            except ValueError:
                raise PointCloudFormatError(f"{path}:{lineno}: non-numeric value")
            if len(row) != D:
                raise PointCloudFormatError(f"{path}:{lineno}: expected {D} values, got {len(row)}")
            rows.append(row)
    if len(rows) != n:
        raise PointCloudFormatError(f"{path}: header says {n} points, found {len(rows)}")
    pts = np.array(rows, dtype=float).reshape(n, D)
    if not np.all(np.isfinite(pts)):
        raise PointCloudFormatError(f"{path}: non-finite coordinate")
    return PointCloud(pts, provenance)
