"""Analytic test manifolds with exact projection and curvature oracles.

All point-valued functions accept a single point of shape ``(D,)`` or a
batch of shape ``(n, D)`` and return arrays of matching leading shape.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np


class GeometryError(ValueError):
    pass


class DegenerateProjection(GeometryError):
    """The query point has no unique nearest point on the manifold."""


class OutOfTube(GeometryError):
    """The query point is not closer to the manifold than its reach."""


class Unsupported(NotImplementedError):
    """The requested oracle is not available for this manifold."""


class Kind(enum.Enum):
    CIRCLE = "circle"
    SPHERE = "sphere"
    TORUS = "torus"
    FERMAT_QUARTIC = "quartic"


# Maximum of ||II||_op on {x^4 + y^4 = 1}, attained where |x| = |y| = 2^(-1/4).
_QUARTIC_MAX_CURVATURE = 3.0 * 2.0 ** -0.25


@dataclass(frozen=True)
class AnalyticManifold:
    """A closed-form test manifold embedded in the first coordinates of R^D.

    ``radius`` is used by circles and spheres, ``major``/``minor`` by the
    torus, and ``extent`` by the Fermat quartic, whose sampled piece is
    ``{x^4 + y^4 = 1, |x| <= extent, |y| <= extent}`` in C^2 = R^4.
    """

    kind: Kind
    ambient_dim: int
    radius: float = 1.0
    major: float = 2.0
    minor: float = 1.0
    extent: float = 1.25

    def __post_init__(self):
        D = self.ambient_dim
        if self.kind is Kind.CIRCLE:
            ok = D >= 2 and self.radius > 0
        elif self.kind is Kind.SPHERE:
            ok = D >= 3 and self.radius > 0
        elif self.kind is Kind.TORUS:
            ok = D >= 3 and self.major > self.minor > 0
        else:
            ok = D == 4 and self.extent > 1.0
        if not ok:
            raise ValueError(f"invalid parameters for {self.kind.value} in R^{D}")

    @property
    def intrinsic_dim(self) -> int:
        return 1 if self.kind is Kind.CIRCLE else 2

    @property
    def codim(self) -> int:
        return self.ambient_dim - self.intrinsic_dim

    @property
    def reach(self) -> float:
        if self.kind in (Kind.CIRCLE, Kind.SPHERE):
            return self.radius
        if self.kind is Kind.TORUS:
            return min(self.minor, self.major - self.minor)
        # local feature size; the sheets over x = 0 are sqrt(2) apart, far
        # above twice this value
        return 1.0 / _QUARTIC_MAX_CURVATURE

    @cached_property
    def volume(self) -> float:
        if self.kind is Kind.CIRCLE:
            return 2 * math.pi * self.radius
        if self.kind is Kind.SPHERE:
            return 4 * math.pi * self.radius**2
        if self.kind is Kind.TORUS:
            return 4 * math.pi**2 * self.major * self.minor
        return _quartic_area(self.extent)

    def describe(self) -> str:
        if self.kind in (Kind.CIRCLE, Kind.SPHERE):
            return f"{self.kind.value}(R={self.radius:g};D={self.ambient_dim})"
        if self.kind is Kind.TORUS:
            return f"torus(R={self.major:g};r={self.minor:g};D={self.ambient_dim})"
        return f"quartic(extent={self.extent:g})"


def circle(radius=1.0, ambient_dim=2):
    return AnalyticManifold(Kind.CIRCLE, ambient_dim, radius=radius)


def sphere(radius=1.0, ambient_dim=3):
    return AnalyticManifold(Kind.SPHERE, ambient_dim, radius=radius)


def torus(major=2.0, minor=1.0, ambient_dim=3):
    return AnalyticManifold(Kind.TORUS, ambient_dim, major=major, minor=minor)


def fermat_quartic(extent=1.25):
    return AnalyticManifold(Kind.FERMAT_QUARTIC, 4, extent=extent)


@dataclass(frozen=True)
class TangentFrame:
    point: np.ndarray
    tangent: np.ndarray  # (d, D)
    normal: np.ndarray  # (D - d, D)


def _quartic_area(extent, n_radial=96, n_angle=1024):
    # 8 copies (4 branches of y, and the x <-> y swap) of the graph patch
    # over {|x| <= |y| <= extent}, in polar coordinates on the x-plane.
    b8 = extent**8
    xg, wg = np.polynomial.legendre.leggauss(n_radial)
    alpha = (np.arange(n_angle) + 0.5) * (2 * np.pi / n_angle)
    c = np.cos(4 * alpha)
    u_max = c + np.sqrt(c * c - 1 + b8)
    u_max = np.where(c > 0, np.minimum(u_max, 0.5 / np.where(c > 0, c, 1.0)), u_max)
    rho_max = u_max**0.25
    rho = (xg[None, :] + 1) / 2 * rho_max[:, None]
    w = wg[None, :] * rho_max[:, None] / 2
    x = rho * np.exp(1j * alpha[:, None])
    y_abs2 = np.sqrt(np.abs(1 - x**4))
    integrand = (1 + rho**6 / y_abs2**3) * rho
    return float(8 * (integrand * w).sum() * (2 * np.pi / n_angle))


# ---------------------------------------------------------------- helpers


def _as_batch(z):
    z = np.asarray(z, dtype=float)
    return z.reshape(-1, z.shape[-1]), z.ndim == 1


def _unbatch(a, single):
    return a[0] if single else a


def _quartic_parts(p):
    x = p[:, 0] + 1j * p[:, 1]
    y = p[:, 2] + 1j * p[:, 3]
    return x, y


def _quartic_constraint(p):
    x, y = _quartic_parts(p)
    f = x**4 + y**4 - 1
    return np.stack([f.real, f.imag], axis=1)


def _quartic_jacobian(p):
    """Rows are grad Re f and grad Im f, shape (n, 2, 4)."""
    x, y = _quartic_parts(p)
    fx, fy = 4 * x**3, 4 * y**3
    re = np.stack([fx.real, -fx.imag, fy.real, -fy.imag], axis=1)
    im = np.stack([fx.imag, fx.real, fy.imag, fy.real], axis=1)
    return np.stack([re, im], axis=1)


def _quartic_hessians(p):
    """Hessians of Re f and Im f, shape (n, 2, 4, 4)."""
    x, y = _quartic_parts(p)
    n = p.shape[0]
    H = np.zeros((n, 2, 4, 4))
    for k, g in ((0, 12 * x**2), (2, 12 * y**2)):
        s, t = g.real, g.imag
        H[:, 0, k, k], H[:, 0, k + 1, k + 1] = s, -s
        H[:, 0, k, k + 1] = H[:, 0, k + 1, k] = -t
        H[:, 1, k, k], H[:, 1, k + 1, k + 1] = t, -t
        H[:, 1, k, k + 1] = H[:, 1, k + 1, k] = s
    return H


def _project_quartic(z, max_iter=100):
    """Lagrange-Newton on min ||p - z||^2 subject to Re f = Im f = 0."""
    p = z.copy()
    # Gauss-Newton onto the constraint set gives a nearby foot point
    for _ in range(50):
        c = _quartic_constraint(p)
        if np.all(np.abs(c) < 1e-13):
            break
        J = _quartic_jacobian(p)
        G = J @ J.transpose(0, 2, 1)
        step = np.linalg.solve(G, c[..., None])[..., 0]
        p = p - np.einsum("nkd,nk->nd", J, step)
    J = _quartic_jacobian(p)
    G = J @ J.transpose(0, 2, 1)
    lam = -np.linalg.solve(G, np.einsum("nkd,nd->nk", J, p - z)[..., None])[..., 0]
    n = p.shape[0]
    done = np.zeros(n, dtype=bool)
    eye = np.eye(4)
    for _ in range(max_iter):
        c = _quartic_constraint(p)
        J = _quartic_jacobian(p)
        grad = (p - z) + np.einsum("nkd,nk->nd", J, lam)
        done = (np.abs(c).max(axis=1) < 1e-10) & (np.abs(grad).max(axis=1) < 1e-8)
        if done.all():
            return p
        Hs = _quartic_hessians(p)
        K = np.zeros((n, 6, 6))
        K[:, :4, :4] = eye + np.einsum("nk,nkij->nij", lam, Hs)
        K[:, :4, 4:] = J.transpose(0, 2, 1)
        K[:, 4:, :4] = J
        rhs = -np.concatenate([grad, c], axis=1)
        step = np.linalg.solve(K, rhs[..., None])[..., 0]
        step[done] = 0.0
        p = p + step[:, :4]
        lam = lam + step[:, 4:]
    raise DegenerateProjection("projection onto the quartic did not converge")


# -------------------------------------------------------------- projection


def project(m: AnalyticManifold, z):
    """Nearest-point projection onto ``m``.

    Raises DegenerateProjection at focal points (circle or sphere centre,
    torus axis or core circle), which have no unique nearest point.
    """
    zb, single = _as_batch(z)
    if zb.shape[1] != m.ambient_dim:
        raise ValueError(f"expected {m.ambient_dim}-vectors, got {zb.shape[1]}")
    out = np.zeros_like(zb)
    if m.kind is Kind.CIRCLE:
        rho = np.hypot(zb[:, 0], zb[:, 1])
        if np.any(rho <= 1e-14 * m.radius):
            raise DegenerateProjection("circle centre axis is equidistant")
        out[:, 0] = m.radius * zb[:, 0] / rho
        out[:, 1] = m.radius * zb[:, 1] / rho
    elif m.kind is Kind.SPHERE:
        rho = np.linalg.norm(zb[:, :3], axis=1)
        if np.any(rho <= 1e-14 * m.radius):
            raise DegenerateProjection("sphere centre is equidistant")
        out[:, :3] = m.radius * zb[:, :3] / rho[:, None]
    elif m.kind is Kind.TORUS:
        rho = np.hypot(zb[:, 0], zb[:, 1])
        if np.any(rho <= 1e-14 * m.major):
            raise DegenerateProjection("torus axis is equidistant")
        c = np.zeros((zb.shape[0], 3))
        c[:, 0] = m.major * zb[:, 0] / rho
        c[:, 1] = m.major * zb[:, 1] / rho
        w = zb[:, :3] - c
        wn = np.linalg.norm(w, axis=1)
        if np.any(wn <= 1e-14 * m.minor):
            raise DegenerateProjection("torus core circle is equidistant")
        out[:, :3] = c + m.minor * w / wn[:, None]
    else:
        out = _project_quartic(zb)
    return _unbatch(out, single)


def distance(m: AnalyticManifold, z):
    """Euclidean distance from ``z`` to ``m``."""
    return np.linalg.norm(np.asarray(z, dtype=float) - project(m, z), axis=-1)


# ---------------------------------------------------------- parametrization


def embed(m: AnalyticManifold, params):
    """Map intrinsic parameters to points of ``m``.

    Circle: angle.  Sphere: (polar, azimuth).  Torus: (tube angle, axial
    angle).  The quartic is implicit and has no global parametrization.
    """
    t = np.asarray(params, dtype=float)
    if m.kind is Kind.FERMAT_QUARTIC:
        raise Unsupported("the quartic has no global parametrization")
    if m.kind is Kind.CIRCLE:
        t = t[..., None] if t.shape[-1:] != (1,) else t
        a = t[..., 0]
        cols = [m.radius * np.cos(a), m.radius * np.sin(a)]
    elif m.kind is Kind.SPHERE:
        th, ph = t[..., 0], t[..., 1]
        s = np.sin(th)
        cols = [m.radius * s * np.cos(ph), m.radius * s * np.sin(ph), m.radius * np.cos(th)]
    else:
        th, ph = t[..., 0], t[..., 1]
        rr = m.major + m.minor * np.cos(th)
        cols = [rr * np.cos(ph), rr * np.sin(ph), m.minor * np.sin(th)]
    pad = [np.zeros_like(cols[0])] * (m.ambient_dim - len(cols))
    return np.stack(cols + pad, axis=-1)


def parameters(m: AnalyticManifold, x):
    """Inverse of :func:`embed` for points on ``m``."""
    x = np.asarray(x, dtype=float)
    if m.kind is Kind.CIRCLE:
        return np.arctan2(x[..., 1], x[..., 0])[..., None]
    if m.kind is Kind.SPHERE:
        th = np.arccos(np.clip(x[..., 2] / m.radius, -1.0, 1.0))
        return np.stack([th, np.arctan2(x[..., 1], x[..., 0])], axis=-1)
    if m.kind is Kind.TORUS:
        ph = np.arctan2(x[..., 1], x[..., 0])
        th = np.arctan2(x[..., 2], np.hypot(x[..., 0], x[..., 1]) - m.major)
        return np.stack([th, ph], axis=-1)
    raise Unsupported("the quartic has no global parametrization")


# ------------------------------------------------------------------ frames


def _inward_normal(m, xb):
    """Unit normal pointing toward the curvature centre (circle/sphere/torus)."""
    n = np.zeros_like(xb)
    if m.kind is Kind.CIRCLE:
        n[:, :2] = -xb[:, :2] / m.radius
    elif m.kind is Kind.SPHERE:
        n[:, :3] = -xb[:, :3] / m.radius
    else:
        rho = np.hypot(xb[:, 0], xb[:, 1])
        c = np.zeros((xb.shape[0], 3))
        c[:, 0] = m.major * xb[:, 0] / rho
        c[:, 1] = m.major * xb[:, 1] / rho
        n[:, :3] = (c - xb[:, :3]) / m.minor
    return n


def _complement(A, k):
    """Orthonormal basis, shape (n, k, D), of the complement of rows of A."""
    n, r, D = A.shape
    P = np.eye(D)[None] - A.transpose(0, 2, 1) @ A
    # eigenvectors of the projector with eigenvalue 1
    _, vecs = np.linalg.eigh(P)
    return vecs[:, :, D - k:].transpose(0, 2, 1)


def frames(m: AnalyticManifold, x):
    """Batched tangent and normal bases at points of ``m``.

    Returns ``(T, N)`` with shapes ``(n, d, D)`` and ``(n, D - d, D)``.
    """
    xb, _ = _as_batch(x)
    n, D = xb.shape
    d = m.intrinsic_dim
    if m.kind is Kind.CIRCLE:
        T = np.zeros((n, 1, D))
        T[:, 0, 0] = -xb[:, 1] / m.radius
        T[:, 0, 1] = xb[:, 0] / m.radius
        return T, _complement(T, D - 1)
    if m.kind is Kind.SPHERE:
        N0 = -_inward_normal(m, xb)[:, None, :]
        T = np.zeros((n, 2, D))
        T[:, :, :3] = _complement(N0[:, :, :3], 2)
        return T, _complement(T, D - 2)
    if m.kind is Kind.TORUS:
        th, ph = parameters(m, xb).T
        T = np.zeros((n, 2, D))
        T[:, 0, 0] = -np.sin(th) * np.cos(ph)
        T[:, 0, 1] = -np.sin(th) * np.sin(ph)
        T[:, 0, 2] = np.cos(th)
        T[:, 1, 0] = -np.sin(ph)
        T[:, 1, 1] = np.cos(ph)
        return T, _complement(T, D - 2)
    J = _quartic_jacobian(xb)
    # grad Re f and grad Im f are orthogonal with equal norms (Cauchy-Riemann)
    N = J / np.linalg.norm(J, axis=2, keepdims=True)
    return _complement(N, d), N


def tangent_frame(m: AnalyticManifold, x) -> TangentFrame:
    x = np.asarray(x, dtype=float)
    T, N = frames(m, x[None])
    return TangentFrame(point=x, tangent=T[0], normal=N[0])


# --------------------------------------------------------------- curvature


def _principal_curvatures(m, xb):
    """Curvatures along the frame tangents w.r.t. the inward normal, (n, d)."""
    n = xb.shape[0]
    if m.kind is Kind.CIRCLE:
        return np.full((n, 1), 1.0 / m.radius)
    if m.kind is Kind.SPHERE:
        return np.full((n, 2), 1.0 / m.radius)
    th = parameters(m, xb)[:, 0]
    k_tube = np.full(n, 1.0 / m.minor)
    k_axial = np.cos(th) / (m.major + m.minor * np.cos(th))
    return np.stack([k_tube, k_axial], axis=1)


def second_fundamental_form(m: AnalyticManifold, x):
    """II(e_i, e_j) as ambient vectors for the tangent basis of :func:`frames`.

    Returns an array of shape ``(n, d, d, D)`` (or ``(d, d, D)`` for a
    single point).
    """
    xb, single = _as_batch(x)
    T, N = frames(m, xb)
    if m.kind is Kind.FERMAT_QUARTIC:
        # II(X, Y) = -sum_kl (X^T Hess c_k Y) G^{kl} grad c_l
        J = _quartic_jacobian(xb)
        Hs = _quartic_hessians(xb)
        Ginv = np.linalg.inv(J @ J.transpose(0, 2, 1))
        hij = np.einsum("nid,nkde,nje->nkij", T, Hs, T)
        II = -np.einsum("nkij,nkl,nld->nijd", hij, Ginv, J)
        return _unbatch(II, single)
    kappa = _principal_curvatures(m, xb)
    nin = _inward_normal(m, xb)
    d = m.intrinsic_dim
    II = np.zeros((xb.shape[0], d, d, m.ambient_dim))
    for i in range(d):
        II[:, i, i, :] = kappa[:, i, None] * nin
    return _unbatch(II, single)


def mean_curvature_vector(m: AnalyticManifold, x):
    """H = trace(II) / d at points of ``m``; unsupported for the quartic."""
    if m.kind is Kind.FERMAT_QUARTIC:
        raise Unsupported("mean curvature oracle not available for the quartic")
    xb, single = _as_batch(x)
    H = _principal_curvatures(m, xb).mean(axis=1)[:, None] * _inward_normal(m, xb)
    return _unbatch(H, single)


def curvature_norm(m: AnalyticManifold, x):
    """Operator norm sup_{|u|=1} ||II(u, u)|| at points of ``m``."""
    xb, single = _as_batch(x)
    if m.kind is Kind.FERMAT_QUARTIC:
        a = xb[:, 0] ** 2 + xb[:, 1] ** 2
        b = xb[:, 2] ** 2 + xb[:, 3] ** 2
        out = 3 * a * b / (a**3 + b**3) ** 1.5
    else:
        out = np.abs(_principal_curvatures(m, xb)).max(axis=1)
    return _unbatch(out, single)


def shape_determinant(m: AnalyticManifold, y):
    """det(I_d - <v_y, II_{pi(y)}>) for ``y`` inside the reach tube.

    Closed form from the principal curvatures: with ``s`` the outward
    signed offset, each principal direction contributes ``1 + s * kappa``.
    """
    if m.kind is Kind.FERMAT_QUARTIC:
        raise Unsupported("shape determinant not available for the quartic")
    yb, single = _as_batch(y)
    x = project(m, yb)
    v = yb - x
    if np.any(np.linalg.norm(v, axis=1) >= m.reach):
        raise OutOfTube("point is not within the reach of the manifold")
    nin = _inward_normal(m, x)
    s = -np.einsum("nd,nd->n", v, nin)
    kappa = _principal_curvatures(m, x)
    det = np.prod(1 + s[:, None] * kappa, axis=1)
    return _unbatch(det, single)
