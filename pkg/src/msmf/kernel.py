"""Truncated Gaussian kernel, its bandwidth constant and incomplete gamma."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 1000


def _gamma_series(s, x):
    # x^s e^-x sum_n x^n / (s (s+1) ... (s+n))
    term = total = 1.0 / s
    ap = s
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + s * math.log(x))


def _gamma_cfrac(s, x):
    # upper incomplete gamma by modified Lentz on the Legendre continued fraction
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + s * math.log(x)) * h


def lower_incomplete_gamma(s: float, x: float) -> float:
    """gamma(s, x) = int_0^x t^(s-1) e^-t dt.

    Uses the power series below ``x = s + 1`` and the continued fraction
    for the complement above it.
    """
    if s <= 0:
        raise ValueError(f"lower_incomplete_gamma requires s > 0, got {s}")
    if x < 0:
        raise ValueError(f"lower_incomplete_gamma requires x >= 0, got {x}")
    if x == 0:
        return 0.0
    if x < s + 1.0:
        return _gamma_series(s, x)
    return math.gamma(s) - _gamma_cfrac(s, x)


def regularized_lower_gamma(s: float, x: float) -> float:
    if x == 0:
        return 0.0
    if x < s + 1.0:
        return _gamma_series(s, x) / math.gamma(s)
    return 1.0 - _gamma_cfrac(s, x) / math.gamma(s)


class Cutoff(enum.Enum):
    HARD = "hard"
    SMOOTH = "smooth"


def chi(t, rho0=0.9):
    """C^inf-at-1 bump: 1 on [0, rho0], 0 on [1, inf)."""
    t = np.asarray(t, dtype=float)
    s = np.clip((t - rho0) / (1.0 - rho0), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        inner = np.where(s < 1.0, 1.0 - 1.0 / (1.0 - s * s), -np.inf)
    return np.where(t <= rho0, 1.0, np.exp(inner))


def cutoff_profile(t, cutoff=Cutoff.HARD, rho0=0.9):
    t = np.asarray(t, dtype=float)
    if Cutoff(cutoff) is Cutoff.HARD:
        return (t <= 1.0).astype(float)
    return chi(t, rho0)


@lru_cache(maxsize=None)
def _smooth_moment_ratio(D, rho0, nodes=400):
    # int_0^1 e^-t^2 chi(t) t^(D-1) dt over int_0^1 e^-t^2 chi(t) t^(D+1) dt,
    # split at rho0 where chi stops being analytic
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    num = den = 0.0
    for a, b in ((0.0, rho0), (rho0, 1.0)):
        t = (b - a) / 2 * xg + (a + b) / 2
        w = wg * (b - a) / 2 * np.exp(-t * t) * chi(t, rho0)
        num += float(np.sum(w * t ** (D - 1)))
        den += float(np.sum(w * t ** (D + 1)))
    return num / den


def bandwidth_constant(D: int, cutoff=Cutoff.HARD, rho0: float = 0.9) -> float:
    """c_D = sqrt(A / 2B) for the kernel moments on the unit ball.

    With a hard cutoff both moments reduce to lower incomplete gamma
    values and ``c_D^2 = D gamma(D/2, 1) / (2 gamma(D/2 + 1, 1))``.
    """
    if D < 1:
        raise ValueError("ambient dimension must be >= 1")
    if Cutoff(cutoff) is Cutoff.HARD:
        s = D / 2
        ratio = D * lower_incomplete_gamma(s, 1.0) / (2 * lower_incomplete_gamma(s + 1, 1.0))
    else:
        ratio = D * _smooth_moment_ratio(D, float(rho0)) / 2
    return math.sqrt(ratio)


@dataclass(frozen=True)
class KernelConfig:
    sigma: float
    ambient_dim: int
    cutoff: Cutoff = Cutoff.HARD
    rho0: float = 0.9
    r: float = field(init=False)

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        object.__setattr__(self, "cutoff", Cutoff(self.cutoff))
        if self.cutoff is Cutoff.SMOOTH and not 0.0 < self.rho0 < 1.0:
            raise ValueError("rho0 must lie in (0, 1)")
        c = bandwidth_constant(self.ambient_dim, self.cutoff, self.rho0)
        object.__setattr__(self, "r", c * self.sigma)

    @property
    def support_radius(self) -> float:
        return math.sqrt(2.0) * self.r


def kernel_weight(diff, cfg: KernelConfig):
    """phi_r(diff) = (2 pi r^2)^(-D/2) exp(-|diff|^2 / 2r^2) cut(|diff| / sqrt(2) r)."""
    diff = np.asarray(diff, dtype=float)
    sq = np.sum(diff * diff, axis=-1)
    r2 = cfg.r * cfg.r
    t = np.sqrt(sq) / cfg.support_radius
    w = (2 * math.pi * r2) ** (-cfg.ambient_dim / 2) * np.exp(-sq / (2 * r2))
    w = w * cutoff_profile(t, cfg.cutoff, cfg.rho0)
    return np.where(w < 1e-300, 0.0, w)


def log_kernel_weight(sq_dist, cfg: KernelConfig):
    """log phi_r as a function of squared distance; -inf outside the support."""
    sq = np.asarray(sq_dist, dtype=float)
    r2 = cfg.r * cfg.r
    t = np.sqrt(sq) / cfg.support_radius
    with np.errstate(divide="ignore"):
        cut = np.log(cutoff_profile(t, cfg.cutoff, cfg.rho0))
    return -cfg.ambient_dim / 2 * math.log(2 * math.pi * r2) - sq / (2 * r2) + cut
