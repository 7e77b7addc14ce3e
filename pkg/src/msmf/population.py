"""Quadrature oracles for the noisy density, its score and the population mean.

The noisy density is the Gaussian convolution of the uniform law on the
manifold.  Its integrand is concentrated within a few sigma of the nearest
point, so each evaluation integrates over a parameter window centred on
the projection, ``WINDOW`` Gaussian widths on each side, with
Gauss-Legendre nodes; when the window would exceed a full period the full
period is used.  Everything is accumulated in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import AnalyticManifold, Kind, Unsupported, project, shape_determinant
from .kernel import Cutoff, KernelConfig, cutoff_profile

WINDOW = 14.0
_CHUNK_NODES = 2_000_000


def _lse_stats(logf, vals=None):
    """log sum exp(logf) along the last axis and optional weighted means of vals."""
    m = logf.max(axis=-1, keepdims=True)
    w = np.exp(logf - m)
    s = w.sum(axis=-1)
    out = np.log(s) + m[..., 0]
    if vals is None:
        return out, None
    means = np.einsum("nq,nqk->nk", w, vals) / s[:, None]
    return out, means


@dataclass(frozen=True)
class DensityOracle:
    manifold: AnalyticManifold
    sigma: float
    resolution: int | None = None

    def __post_init__(self):
        if self.manifold.kind is Kind.FERMAT_QUARTIC:
            raise Unsupported("density oracle needs a global parametrization")
        if self.resolution is None:
            object.__setattr__(self, "resolution", 512 if self.manifold.intrinsic_dim == 1 else 256)
        if self.resolution < 64:
            raise ValueError("resolution must be >= 64")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    # log p and E[x - y | y] under the posterior exp(-|y - x|^2 / 2 sigma^2) dmu(x)
    def _eval(self, y, want_mean):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        m = self.manifold
        per_point = self.resolution ** (2 if m.kind is Kind.TORUS else 1)
        step = max(1, _CHUNK_NODES // per_point)
        logs, means = [], []
        fn = {Kind.CIRCLE: self._circle, Kind.SPHERE: self._sphere, Kind.TORUS: self._torus}[m.kind]
        for i in range(0, y.shape[0], step):
            lg, mn = fn(y[i:i + step], want_mean)
            logs.append(lg)
            means.append(mn)
        D = m.ambient_dim
        norm = -D / 2 * math.log(2 * math.pi * self.sigma**2) - math.log(m.volume)
        logp = np.concatenate(logs) + norm
        return logp, (np.concatenate(means) if want_mean else None)

    def _width(self, scale2):
        with np.errstate(divide="ignore"):
            w = WINDOW * self.sigma / np.sqrt(scale2)
        return np.minimum(np.pi, w)

    def _circle(self, y, want_mean):
        R, s2 = self.manifold.radius, self.sigma**2
        xg, wg = np.polynomial.legendre.leggauss(self.resolution)
        rho = np.hypot(y[:, 0], y[:, 1])
        alpha = np.arctan2(y[:, 1], y[:, 0])
        rest2 = np.sum(y[:, 2:] ** 2, axis=1)
        W = self._width(rho * R)
        delta = W[:, None] * xg[None, :]
        one_minus_cos = 2 * np.sin(delta / 2) ** 2
        sq = (rho - R)[:, None] ** 2 + 2 * (rho * R)[:, None] * one_minus_cos + rest2[:, None]
        logf = -sq / (2 * s2) + np.log(R * W[:, None] * wg[None, :])
        if not want_mean:
            return _lse_stats(logf)[0], None
        # offsets x - y in the frame (radial, tangential) at the projection
        vals = np.stack([(R - rho)[:, None] - R * one_minus_cos, R * np.sin(delta)], axis=-1)
        lg, loc = _lse_stats(logf, vals)
        ca, sa = np.cos(alpha), np.sin(alpha)
        mean = np.zeros_like(y)
        mean[:, 0] = loc[:, 0] * ca - loc[:, 1] * sa
        mean[:, 1] = loc[:, 0] * sa + loc[:, 1] * ca
        mean[:, 2:] = -y[:, 2:]
        return lg, mean

    def _sphere(self, y, want_mean):
        R, s2 = self.manifold.radius, self.sigma**2
        xg, wg = np.polynomial.legendre.leggauss(self.resolution)
        rho = np.linalg.norm(y[:, :3], axis=1)
        rest2 = np.sum(y[:, 3:] ** 2, axis=1)
        W = self._width(rho * R)
        th = W[:, None] * (xg[None, :] + 1) / 2
        one_minus_cos = 2 * np.sin(th / 2) ** 2
        sq = (rho - R)[:, None] ** 2 + 2 * (rho * R)[:, None] * one_minus_cos + rest2[:, None]
        # azimuth integrates to 2 pi: the integrand is symmetric about the axis through y
        logf = -sq / (2 * s2) + np.log(2 * np.pi * R * R * np.sin(th) * (W[:, None] / 2) * wg[None, :])
        if not want_mean:
            return _lse_stats(logf)[0], None
        vals = ((R - rho)[:, None] - R * one_minus_cos)[..., None]
        lg, radial = _lse_stats(logf, vals)
        with np.errstate(invalid="ignore", divide="ignore"):
            u = np.where(rho[:, None] > 0, y[:, :3] / rho[:, None], np.array([0.0, 0.0, 1.0]))
        mean = np.zeros_like(y)
        mean[:, :3] = radial * u
        mean[:, 3:] = -y[:, 3:]
        return lg, mean

    def _torus(self, y, want_mean):
        m = self.manifold
        Rm, rm, s2 = m.major, m.minor, self.sigma**2
        q = self.resolution
        xg, wg = np.polynomial.legendre.leggauss(q)
        rho = np.hypot(y[:, 0], y[:, 1])
        phi0 = np.arctan2(y[:, 1], y[:, 0])
        wlen = np.hypot(rho - Rm, y[:, 2])
        th0 = np.arctan2(y[:, 2], rho - Rm)
        W_th = self._width(wlen * rm)
        W_ph = self._width(rho * (Rm - rm))
        th = th0[:, None] + W_th[:, None] * xg[None, :]
        ph = phi0[:, None] + W_ph[:, None] * xg[None, :]
        rr = Rm + rm * np.cos(th)  # (n, q)
        # offsets x - y, shape (n, q_th, q_ph, 3)
        dx = rr[:, :, None] * np.cos(ph[:, None, :]) - y[:, 0, None, None]
        dy = rr[:, :, None] * np.sin(ph[:, None, :]) - y[:, 1, None, None]
        dz = np.broadcast_to((rm * np.sin(th) - y[:, 2, None])[:, :, None], dx.shape)
        rest2 = np.sum(y[:, 3:] ** 2, axis=1)
        sq = dx * dx + dy * dy + dz * dz + rest2[:, None, None]
        wts = (W_th[:, None] * wg)[:, :, None] * (W_ph[:, None] * wg)[:, None, :]
        logf = -sq / (2 * s2) + np.log(rm * rr[:, :, None] * wts)
        n = y.shape[0]
        logf = logf.reshape(n, q * q)
        if not want_mean:
            return _lse_stats(logf)[0], None
        vals = np.stack([dx, dy, dz], axis=-1).reshape(n, q * q, 3)
        lg, loc = _lse_stats(logf, vals)
        mean = np.zeros_like(y)
        mean[:, :3] = loc
        mean[:, 3:] = -y[:, 3:]
        return lg, mean

    def log_density(self, y):
        return self._eval(y, False)[0]

    def density(self, y):
        return np.exp(self.log_density(y))

    def score(self, y, method="analytic"):
        """grad log p_sigma.

        ``analytic`` differentiates under the integral sign, giving
        ``(E[x | y] - y) / sigma^2``; ``fd`` takes central differences of
        the log density with step ``1e-5 sigma``.
        """
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if method == "analytic":
            return self._eval(y, True)[1] / self.sigma**2
        if method != "fd":
            raise ValueError(f"unknown score method {method!r}")
        h = 1e-5 * self.sigma
        D = y.shape[1]
        out = np.zeros_like(y)
        for k in range(D):
            e = np.zeros(D)
            e[k] = h
            out[:, k] = (self.log_density(y + e) - self.log_density(y - e)) / (2 * h)
        return out


def density(o: DensityOracle, y):
    y = np.asarray(y, dtype=float)
    out = o.density(y)
    return out[0] if y.ndim == 1 else out


def log_density(o: DensityOracle, y):
    y = np.asarray(y, dtype=float)
    out = o.log_density(y)
    return out[0] if y.ndim == 1 else out


def score(o: DensityOracle, y, method="analytic"):
    y = np.asarray(y, dtype=float)
    out = o.score(y, method)
    return out[0] if y.ndim == 1 else out


@dataclass(frozen=True)
class GaussianDensity:
    """Isotropic normal density, an analytic stand-in for p_sigma."""

    mean: tuple
    scale: float = 1.0

    def log_density(self, y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        D = y.shape[1]
        d2 = np.sum((y - np.asarray(self.mean)) ** 2, axis=1)
        return -d2 / (2 * self.scale**2) - D / 2 * math.log(2 * math.pi * self.scale**2)

    def score(self, y):
        return -(np.asarray(y, dtype=float) - np.asarray(self.mean)) / self.scale**2


@dataclass(frozen=True)
class ConstantDensity:
    value: float = 1.0

    def log_density(self, y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        return np.full(y.shape[0], math.log(self.value))


def _ball_nodes(D, radius, n_radial, n_angular):
    """Offsets and weights of a polar tensor rule on the ball of given radius."""
    xr, wr = np.polynomial.legendre.leggauss(n_radial)
    t = radius * (xr + 1) / 2
    wt = wr * radius / 2
    if D == 2:
        ang = np.arange(n_angular) * (2 * np.pi / n_angular)
        u = t[:, None, None] * np.stack([np.cos(ang), np.sin(ang)], axis=-1)[None]
        w = (wt * t)[:, None] * np.full(n_angular, 2 * np.pi / n_angular)[None]
        return u.reshape(-1, 2), w.reshape(-1)
    if D == 3:
        n_polar = max(8, n_angular // 2)
        xc, wc = np.polynomial.legendre.leggauss(n_polar)
        az = np.arange(n_angular) * (2 * np.pi / n_angular)
        st = np.sqrt(1 - xc**2)
        dirs = np.stack([
            st[:, None] * np.cos(az)[None],
            st[:, None] * np.sin(az)[None],
            np.broadcast_to(xc[:, None], (n_polar, n_angular)),
        ], axis=-1)
        u = t[:, None, None, None] * dirs[None]
        w = (wt * t * t)[:, None, None] * (wc[:, None] * (2 * np.pi / n_angular))[None]
        w = np.broadcast_to(w, u.shape[:-1])
        return u.reshape(-1, 3), w.reshape(-1)
    raise Unsupported(f"ball quadrature implemented for D <= 3, got D={D}")


def population_mean(dens, z, cfg: KernelConfig, n_radial=200, n_angular=None):
    """mu_z = int phi_r(y - z) y p(y) dy / int phi_r(y - z) p(y) dy over the ball.

    ``dens`` is anything with a ``log_density`` method (a DensityOracle or
    an analytic stand-in).  D = 2 uses an ``n_radial x n_angular`` polar
    rule; D = 3 a radial x polar x azimuth rule.
    """
    z = np.asarray(z, dtype=float)
    D = z.shape[0]
    if D not in (2, 3):
        raise Unsupported(f"population mean implemented for D <= 3, got D={D}")
    if n_angular is None:
        n_angular = 256 if D == 2 else 64
    u, w = _ball_nodes(D, cfg.support_radius, n_radial, n_angular)
    sq = np.sum(u * u, axis=1)
    logk = -sq / (2 * cfg.r**2)
    if cfg.cutoff is not Cutoff.HARD:
        with np.errstate(divide="ignore"):
            logk = logk + np.log(cutoff_profile(np.sqrt(sq) / cfg.support_radius, cfg.cutoff, cfg.rho0))
    logf = logk + dens.log_density(z + u) + np.log(w)
    logf = logf - logf.max()
    f = np.exp(logf)
    return z + (f @ u) / f.sum()


def density_expansion(m: AnalyticManifold, y, sigma: float):
    """Leading-order p_sigma: Gaussian in the normal offset times det(A_y)^(-1/2)."""
    y = np.asarray(y, dtype=float)
    det = shape_determinant(m, y)
    v = y - project(m, y)
    v2 = np.sum(v * v, axis=-1)
    codim = m.ambient_dim - m.intrinsic_dim
    norm = m.volume * (2 * math.pi * sigma**2) ** (codim / 2)
    return np.exp(-v2 / (2 * sigma**2)) / np.sqrt(det) / norm
