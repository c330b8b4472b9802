"""Pairings, norms, boundary fluxes and the two integration-by-parts identities."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .fields import CARTESIAN, FRAME, FieldError, ScalarField, VectorField, covariant_derivative
from .geometry import Hemisphere, Space, Sphere, VerticalPlane
from .quadrature import QuadratureError, intersect_boxes, sphere_rule, surface_rule, volume_rule

log = logging.getLogger(__name__)

DEFAULT_K = {1: 256, 2: 96, 3: 64}
MAX_K = {1: 4096, 2: 768, 3: 160}


@dataclass(frozen=True)
class NormReport:
    value: float
    error: float
    k: int
    domain: str

    def __float__(self):
        return float(self.value)


def _space(space) -> Space:
    return Space(space)


def _default_k(n, k):
    return k if k is not None else DEFAULT_K.get(n, 24)


def _check_basis(field, space: Space):
    want = FRAME if space is Space.HYPERBOLIC else CARTESIAN
    if isinstance(field, VectorField) and field.basis != want:
        raise FieldError(f"{field.name}: expected {want} components for {space.value} space")


def _box(*fields):
    box = None
    for f in fields:
        box = intersect_boxes(box, f.support)
    if box is None:
        raise QuadratureError("integrand has unbounded support; declare a support box")
    return box


def _volume(space: Space, box, k, domain=None):
    if domain is None:
        domain = "hyperbolic" if space is Space.HYPERBOLIC else "box"
    return volume_rule(domain, box, k)


def pairing(f: VectorField, phi: VectorField, space="euclidean", k: int | None = None) -> float:
    """``int <f, phi>`` over R^n (Lebesgue) or over H^n (``<.,.>_g dV_g``)."""
    space = _space(space)
    _check_basis(f, space)
    _check_basis(phi, space)
    if phi.support is None:
        raise QuadratureError("test field phi must be compactly supported")
    rule = _volume(space, _box(f, phi), _default_k(f.dim, k))
    return float(rule.integrate(lambda x: np.sum(f(x) * phi(x), axis=-1)))


def _refined(build, integrand, k, n, tol):
    """Integrate with ``k`` nodes per axis, refining until two levels agree to ``tol`` (relative).

    ``tol=None`` evaluates once at ``k`` and reports an unknown (NaN) error.
    """
    if tol is None:
        return float(build(k).integrate(integrand)), float("nan"), k
    kmax = MAX_K.get(n, 64)
    coarse = float(build(max(k // 2, 4)).integrate(integrand))
    while True:
        fine = float(build(k).integrate(integrand))
        err = abs(fine - coarse)
        if err <= tol * max(abs(fine), 1e-300) or k >= kmax:
            if err > tol * max(abs(fine), 1e-300) and fine != 0.0:
                log.warning("quadrature estimate %.3g above tolerance %.3g at k=%d", err, tol, k)
            return fine, err, k
        coarse, k = fine, min(2 * k, kmax)


def _pointwise_norm(field, space: Space):
    if isinstance(field, ScalarField):
        return lambda x: np.abs(field(x))
    return lambda x: np.linalg.norm(field(x), axis=-1)


def lp_norm(field, p: float, space="euclidean", domain: str | None = None, k: int | None = None,
            tol: float = 1e-6) -> NormReport:
    """``L^p`` norm of a scalar or vector field; ``p = inf`` is not handled here."""
    space = _space(space)
    _check_basis(field, space)
    n = field.dim
    box = _box(field)
    mag = _pointwise_norm(field, space)
    val, err, kk = _refined(lambda kk: _volume(space, box, kk, domain), lambda x: mag(x) ** p,
                            _default_k(n, k), n, tol)
    val = max(val, 0.0)
    root = val ** (1.0 / p)
    # propagate the relative error through the p-th root
    rel = err / val if val > 0 else 0.0
    return NormReport(root, root * rel / p, kk, domain or space.value)


def l1_norm(f: VectorField, space="euclidean", domain: str | None = None, k: int | None = None,
            tol: float = 1e-6) -> NormReport:
    return lp_norm(f, 1.0, space, domain, k, tol)


def gradient_magnitude(phi, space, x):
    """Frobenius norm of ``nabla phi`` (Euclidean) or ``nabla_g phi`` (hyperbolic) at ``x``."""
    space = _space(space)
    if isinstance(phi, ScalarField):
        g = np.linalg.norm(phi.grad(x), axis=-1)
        return g * x[:, -1] if space is Space.HYPERBOLIC else g
    if space is Space.HYPERBOLIC:
        return np.linalg.norm(covariant_derivative(phi, x), axis=(-2, -1))
    return np.linalg.norm(phi.jac(x), axis=(-2, -1))


def gradient_lp_norm(phi, p: float, space="euclidean", k: int | None = None, tol: float = 1e-6) -> NormReport:
    space = _space(space)
    _check_basis(phi, space)
    n = phi.dim
    box = _box(phi)
    val, err, kk = _refined(lambda kk: _volume(space, box, kk),
                            lambda x: gradient_magnitude(phi, space, x) ** p, _default_k(n, k), n, tol)
    root = max(val, 0.0) ** (1.0 / p)
    rel = err / val if val > 0 else 0.0
    return NormReport(root, root * rel / p, kk, space.value)


def ln_gradient_norm(phi, space="euclidean", k: int | None = None, tol: float = 1e-6) -> NormReport:
    return gradient_lp_norm(phi, float(phi.dim), space, k, tol)


# ---------------------------------------------------------------- surfaces


def _surface_rule(s, box, k):
    if isinstance(s, Sphere):
        return sphere_rule(s.dim, k, s.center, s.radius)
    return surface_rule(s, box=box, k=k)


def _normal(x, s):
    if isinstance(s, VerticalPlane):
        nu = np.zeros_like(x)
        nu[:, s.axis] = 1.0
        return nu
    base = s.base() if isinstance(s, Hemisphere) else s.center
    d = x - base
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def _surface_box(s, *fields):
    if isinstance(s, Sphere):
        return None
    return _box(*fields)


def surface_gradient_magnitude(phi, s, x):
    """Norm of the tangential part of the derivative of ``phi`` along ``s``."""
    nu = _normal(x, s)
    P = np.eye(x.shape[1])[None] - nu[:, :, None] * nu[:, None, :]
    if isinstance(s, Sphere):
        if isinstance(phi, ScalarField):
            return np.linalg.norm(np.einsum("pij,pj->pi", P, phi.grad(x)), axis=-1)
        return np.linalg.norm(phi.jac(x) @ P, axis=(-2, -1))
    if isinstance(phi, ScalarField):
        g = x[:, -1:] * phi.grad(x)
        return np.linalg.norm(np.einsum("pij,pj->pi", P, g), axis=-1)
    # rows of the covariant derivative are derivative directions e_i
    return np.linalg.norm(P @ covariant_derivative(phi, x), axis=(-2, -1))


def surface_lp_norm(field, s, p: float, k: int = 96, gradient: bool = False) -> float:
    rule = _surface_rule(s, _surface_box(s, field), k)
    if gradient:
        vals = lambda x: surface_gradient_magnitude(field, s, x) ** p
    else:
        vals = lambda x: _pointwise_norm(field, None)(x) ** p
    return float(max(rule.integrate(vals), 0.0)) ** (1.0 / p)


def surface_l1_norm(f: VectorField, s, k: int = 96) -> float:
    return surface_lp_norm(f, s, 1.0, k)


def w1n_surface_norm(phi, s, k: int = 96) -> NormReport:
    """``||phi||_{L^n(s)} + ||tangential derivative||_{L^n(s)}`` in the induced measure."""
    n = phi.dim
    vals = []
    for kk in (k // 2, k):
        vals.append(surface_lp_norm(phi, s, n, kk) + surface_lp_norm(phi, s, n, kk, gradient=True))
    return NormReport(vals[1], abs(vals[1] - vals[0]), k, type(s).__name__.lower())


def boundary_flux(f: VectorField, phi: VectorField, s, k: int = 96) -> float:
    """``int_s <f, nu> <phi, nu>`` against ``d sigma`` (sphere) or ``dV'_g``."""
    if isinstance(s, Sphere):
        _check_basis(f, Space.EUCLIDEAN)
        _check_basis(phi, Space.EUCLIDEAN)
        rule = sphere_rule(s.dim, k, s.center, s.radius)
    else:
        _check_basis(f, Space.HYPERBOLIC)
        _check_basis(phi, Space.HYPERBOLIC)
        rule = surface_rule(s, box=_box(f, phi), k=k)

    def integrand(x):
        nu = _normal(x, s)
        return np.sum(f(x) * nu, axis=-1) * np.sum(phi(x) * nu, axis=-1)

    return float(rule.integrate(integrand))


def _residual(lhs, rhs):
    scale = max(abs(lhs), abs(rhs))
    return abs(lhs - rhs) / scale if scale > 0 else 0.0


@dataclass(frozen=True)
class PartsCheck:
    lhs: float
    rhs: float
    residual: float


def verify_parts_euclidean(f: VectorField, psi: ScalarField, k: int | None = None) -> PartsCheck:
    """Flux through the unit sphere against minus the exterior integral of ``<f, grad psi>``."""
    if not f.divergence_free:
        raise FieldError("integration by parts identity needs a divergence-free field")
    if psi.support is None:
        raise QuadratureError("psi must be compactly supported")
    n = f.dim
    k = _default_k(n, k)
    sph = sphere_rule(n, 2 * k)
    lhs = float(sph.integrate(lambda x: np.sum(f(x) * x, axis=-1) * psi(x)))
    ext = volume_rule("exterior", psi.support, k)
    rhs = -float(ext.integrate(lambda x: np.sum(f(x) * psi.grad(x), axis=-1)))
    return PartsCheck(lhs, rhs, _residual(lhs, rhs))


def verify_parts_hyperbolic(f: VectorField, psi: ScalarField, k: int | None = None) -> PartsCheck:
    """Same identity on ``S = {x_1 = 0}`` bounding ``X = {x_1 > 0}`` in the half-space."""
    if f.basis != FRAME or not f.divergence_free:
        raise FieldError("hyperbolic parts identity needs a divergence-free frame field")
    if psi.support is None:
        raise QuadratureError("psi must be compactly supported")
    n = f.dim
    k = k if k is not None else {2: 96, 3: 96}.get(n, 64)
    plane = surface_rule(VerticalPlane(0, 0.0), box=psi.support, k=k)
    lhs = float(plane.integrate(lambda x: f(x)[:, 0] * psi(x)))
    vol = volume_rule("halfspace_x1_positive", psi.support, k)
    rhs = -float(vol.integrate(lambda x: np.sum(f(x) * psi.grad(x), axis=-1) * x[:, -1]))
    return PartsCheck(lhs, rhs, _residual(lhs, rhs))


# ----------------------------------------------------- normal components


def sphere_normal_component(phi: VectorField, center=None) -> ScalarField:
    """``x -> <phi(x), (x - c)/|x - c|>``, smooth away from ``c``."""
    n = phi.dim
    c = np.zeros(n) if center is None else np.asarray(center, float)

    def value(x):
        d = x - c
        return np.sum(phi(x) * d, axis=-1) / np.linalg.norm(d, axis=-1)

    def grad(x):
        d = x - c
        r = np.linalg.norm(d, axis=-1)[:, None]
        u = d / r
        v = phi(x)
        return np.einsum("pij,pi->pj", phi.jac(x), u) + (v - np.sum(v * u, -1, keepdims=True) * u) / r

    return ScalarField(value, grad, n, None, phi.support, f"<{phi.name},nu>")


def plane_normal_component(phi: VectorField, axis: int = 0) -> ScalarField:
    """Restriction of ``<phi, e_axis>_g`` to ``{x_axis = 0}``, as a function on ``H^{n-1}``."""
    n = phi.dim
    keep = [i for i in range(n) if i != axis]

    def lift(y):
        return np.insert(y, axis, 0.0, axis=1)

    support = None
    if phi.support is not None:
        support = (phi.support[0][keep], phi.support[1][keep])
    return ScalarField(lambda y: phi(lift(y))[:, axis], lambda y: phi.jac(lift(y))[:, axis, keep],
                       n - 1, None, support, f"<{phi.name},e{axis}>|S")
