"""Spherical averaging, the map ``Phi_x`` with its Jacobian, and the hemisphere coarea identity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .decomposition import sphere_area
from .fields import CARTESIAN, FRAME, FieldError, VectorField
from .geometry import GeometryError, Hemisphere
from .quadrature import (QuadratureError, as_box, box_rule, gauss_legendre, intersect_boxes, sphere_rule,
                         surface_rule, uniform_box_rule)


@dataclass(frozen=True)
class AveragingConstant:
    """``c`` with ``<a, b> = c * int_{S^{n-1}} <a, w><b, w> d sigma(w)``."""

    n: int
    c: float

    def __float__(self):
        return self.c


def averaging_constant(n: int) -> AveragingConstant:
    if n < 2:
        raise GeometryError(f"averaging needs n >= 2, got {n}")
    return AveragingConstant(n, n / sphere_area(n))


# ------------------------------------------------------------------ Phi_x


def phi_map(x, z) -> np.ndarray:
    """``(x - (z, 0)) / |x - (z, 0)|``, a point of the open upper hemisphere."""
    x = np.asarray(x, float)
    z = np.asarray(z, float)
    if np.any(x[..., -1] <= 0):
        raise GeometryError("x_n must be positive")
    xh, zz = np.broadcast_arrays(x[..., :-1], z)
    xn = np.broadcast_to(x[..., -1:], xh.shape[:-1] + (1,))
    d = np.concatenate([xh - zz, xn], axis=-1)
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def phi_jacobian(x, z) -> np.ndarray:
    """Area distortion ``x_n / |x - (z, 0)|^n`` of ``z -> Phi_x(z)``."""
    x = np.asarray(x, float)
    z = np.asarray(z, float)
    if np.any(x[..., -1] <= 0):
        raise GeometryError("x_n must be positive")
    n = x.shape[-1]
    d2 = np.sum((x[..., :-1] - z) ** 2, axis=-1) + x[..., -1] ** 2
    return x[..., -1] / d2 ** (n / 2.0)


def hemisphere_from(x, omega) -> Hemisphere:
    """Hemisphere through ``x`` whose g-unit normal there is ``x_n * omega``."""
    x = np.asarray(x, float)
    w = np.asarray(omega, float)
    if x[-1] <= 0:
        raise GeometryError("x_n must be positive")
    if not w[-1] > 0:
        raise GeometryError("omega must point strictly upward; vertical planes are not parametrized here")
    w = w / np.linalg.norm(w)
    z = x[:-1] - x[-1] * w[:-1] / w[-1]
    return Hemisphere(z, float(np.linalg.norm(x - np.append(z, 0.0))))


def coarea_weight(x, n: int | None = None, epsrel: float = 1e-13) -> float:
    """``int_{R^{n-1}} x_n / |x - (z, 0)|^n dz`` by adaptive quadrature.

    The substitution ``z_i = tan(u_i)`` is centred at the origin, not at
    ``x``, so the x-independence of the result is a genuine check.
    """
    x = np.asarray(x, float)
    n = x.size if n is None else n
    if x.size != n or n not in (2, 3):
        raise GeometryError("coarea_weight is implemented for n in (2, 3)")
    if x[-1] <= 0:
        raise GeometryError("x_n must be positive")
    h = x[-1]
    kw = dict(epsabs=0.0, epsrel=epsrel, limit=400)
    if n == 2:
        f = lambda u: h / np.cos(u) ** 2 / ((np.tan(u) - x[0]) ** 2 + h * h)
        return quad(f, -np.pi / 2, np.pi / 2, points=[np.arctan(x[0])], **kw)[0]

    def inner(u2):
        z2 = np.tan(u2)
        g = lambda u1: h / np.cos(u1) ** 2 / ((np.tan(u1) - x[0]) ** 2 + (z2 - x[1]) ** 2 + h * h) ** 1.5
        return quad(g, -np.pi / 2, np.pi / 2, points=[np.arctan(x[0])], **kw)[0] / np.cos(u2) ** 2

    return quad(inner, -np.pi / 2, np.pi / 2, points=[np.arctan(x[1])], epsabs=0.0,
                epsrel=max(epsrel, 1e-12), limit=400)[0]


# ------------------------------------------------------- averaged pairings


def _support(*fields):
    box = None
    for f in fields:
        box = intersect_boxes(box, f.support)
    if box is None:
        raise QuadratureError("averaging needs a compactly supported field")
    return box


def euclidean_averaged_pairing(f: VectorField, phi: VectorField, k: int | None = None,
                               order: int | None = None) -> float:
    """``c int_{R^n} int_{S(z,1)} <f, nu><phi, nu> d sigma dz``.

    Each point ``x = z + w`` is reached once per direction ``w``, so this
    equals the direct pairing.
    """
    if f.basis != CARTESIAN or phi.basis != CARTESIAN:
        raise FieldError("Euclidean averaging takes Cartesian fields")
    n = f.dim
    lo, hi = as_box(_support(f, phi))
    k = k or {2: 96, 3: 40}[n]
    zr = uniform_box_rule((lo - 1.0, hi + 1.0), k)
    sph = sphere_rule(n, order or {2: 64, 3: 24}[n])
    w = sph.nodes
    c = averaging_constant(n).c
    total = 0.0
    step = max(1, (1 << 16) // len(w))
    for i in range(0, len(zr.nodes), step):
        Z = zr.nodes[i:i + step]
        X = (Z[:, None, :] + w[None, :, :]).reshape(-1, n)
        W = np.tile(w, (len(Z), 1))
        vals = (np.sum(f(X) * W, -1) * np.sum(phi(X) * W, -1)).reshape(len(Z), len(w))
        total += float(zr.weights[i:i + step] @ (vals @ sph.weights))
    return c * total


def _z_rule(center, scale, k):
    """Nodes on ``R^{n-1}`` via ``z_i = center_i + scale tan(u_i)``."""
    axes = []
    for c in np.atleast_1d(center):
        u, wu = gauss_legendre(-np.pi / 2, np.pi / 2, k, panels=max(1, k // 24))
        axes.append((c + scale * np.tan(u), scale * wu / np.cos(u) ** 2))
    if len(axes) == 1:
        return axes[0][0][:, None], axes[0][1]
    Z1, Z2 = np.meshgrid(axes[0][0], axes[1][0], indexing="ij")
    W1, W2 = np.meshgrid(axes[0][1], axes[1][1], indexing="ij")
    return np.stack([Z1.ravel(), Z2.ravel()], -1), (W1 * W2).ravel()


def _r_window(z, lo, hi):
    """Range of ``|x - (z, 0)|`` over the box."""
    near = np.append(np.clip(z, lo[:-1], hi[:-1]) - z, lo[-1])
    far = np.append(np.maximum(np.abs(lo[:-1] - z), np.abs(hi[:-1] - z)), hi[-1])
    return float(np.linalg.norm(near)), float(np.linalg.norm(far))


def hemisphere_family_integral(G, box, k_z: int = 96, k_r: int = 48, k_s: int = 48) -> float:
    """``int_z int_r int_{S(z,r)} G(x, nu) dV'_g dr / r^{n-1} dz``.

    ``G`` receives surface nodes and the frame components of the upward
    unit normal; it must vanish outside ``box``. The r-nodes are spaced
    logarithmically over the window where ``S(z, r)`` meets the box.
    """
    lo, hi = as_box(box)
    n = lo.size
    if not lo[-1] > 0:
        raise QuadratureError("support box reaches x_n <= 0")
    if n not in (2, 3):
        raise QuadratureError("hemisphere families are implemented for n in (2, 3)")
    center = 0.5 * (lo[:-1] + hi[:-1])
    scale = max(float(np.max(hi[:-1] - lo[:-1])) / 2.0, hi[-1])
    Z, WZ = _z_rule(center, scale, k_z)
    total = 0.0
    for z, wz in zip(Z, WZ):
        r0, r1 = _r_window(z, lo, hi)
        if r1 <= r0:
            continue
        t, wt = gauss_legendre(np.log(r0), np.log(r1), k_r)
        inner = 0.0
        for r, w in zip(np.exp(t), wt):
            s = Hemisphere(z, r)
            rule = surface_rule(s, box=(lo, hi), k=k_s)
            if len(rule) == 0:
                continue
            nu = (rule.nodes - s.base()) / r
            # dr = r dt in the log variable
            inner += w * r ** (2 - n) * float(rule.weights @ G(rule.nodes, nu))
        total += wz * inner
    return total


def hyperbolic_averaged_pairing(f: VectorField, phi: VectorField, **kw) -> float:
    """``2c`` times the hemisphere-family integral of ``<f, nu>_g <phi, nu>_g``.

    Averaging over the full sphere of directions and keeping only the
    upper half is exact because the integrand is even in the direction.
    """
    if f.basis != FRAME or phi.basis != FRAME:
        raise FieldError("hyperbolic averaging takes frame fields")
    n = f.dim
    c = averaging_constant(n).c
    G = lambda x, nu: np.sum(f(x) * nu, -1) * np.sum(phi(x) * nu, -1)
    return 2.0 * c * hemisphere_family_integral(G, _support(f, phi), **kw)


@dataclass(frozen=True)
class CoareaCheck:
    lhs: float
    rhs: float
    weight: float
    residual: float


def verify_coarea(F, k_z: int = 96, k_r: int = 48, k_s: int = 48, k_vol: int = 96) -> CoareaCheck:
    """Hemisphere-family integral of ``F`` against ``coarea_weight * int F dV_g``."""
    if getattr(F, "support", None) is None:
        raise QuadratureError("verify_coarea needs a compactly supported density")
    lo, hi = as_box(F.support)
    n = lo.size
    lhs = hemisphere_family_integral(lambda x, nu: F(x), (lo, hi), k_z, k_r, k_s)
    vol = float(box_rule((lo, hi), k_vol, hyperbolic=True).integrate(F))
    weight = coarea_weight(np.append(np.zeros(n - 1), 1.0), n)
    rhs = weight * vol
    scale = max(abs(lhs), abs(rhs))
    return CoareaCheck(lhs, rhs, weight, abs(lhs - rhs) / scale if scale > 0 else 0.0)
