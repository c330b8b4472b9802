"""Scalar functions and vector fields with analytic first (and second) derivatives.

All evaluators are vectorized: they take an ``(N, n)`` array of points.
``ScalarField.grad`` returns Cartesian partials ``(N, n)``, ``hess`` returns
``(N, n, n)``. ``VectorField.jac[..., i, j]`` is the Cartesian partial
``d_j F^i`` of component ``i``; for hyperbolic fields the components are
frame components (see :mod:`borderlab.geometry`).

Support boxes are ``(lo, hi)`` pairs. The Gaussian-type catalog entries are
declared supported on the box where the profile exceeds ``exp(-49)``; the
truncation error this introduces is far below every tolerance used here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import connection_table
from .quadrature import intersect_boxes, union_boxes

CARTESIAN = "cartesian"
FRAME = "frame"
GAUSS_CUTOFF = 49.0


class FieldError(ValueError):
    pass


def _pts(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[None, :] if x.ndim == 1 else x


class ScalarField:
    def __init__(self, value: Callable, grad: Callable, dim: int, hess: Callable | None = None,
                 support=None, name: str = "scalar"):
        self._value = value
        self._grad = grad
        self._hess = hess
        self.dim = dim
        self.support = None if support is None else (np.asarray(support[0], float), np.asarray(support[1], float))
        self.name = name

    def __repr__(self):
        return f"ScalarField({self.name}, dim={self.dim})"

    def __call__(self, x):
        return self._value(_pts(x))

    def grad(self, x):
        return self._grad(_pts(x))

    def hess(self, x):
        if self._hess is None:
            raise FieldError(f"{self.name} carries no second derivatives")
        return self._hess(_pts(x))

    @property
    def has_hess(self) -> bool:
        return self._hess is not None

    def __add__(self, other: "ScalarField") -> "ScalarField":
        if not isinstance(other, ScalarField):
            return NotImplemented
        h = None
        if self.has_hess and other.has_hess:
            h = lambda x: self.hess(x) + other.hess(x)
        return ScalarField(lambda x: self(x) + other(x), lambda x: self.grad(x) + other.grad(x),
                           self.dim, h, union_boxes(self.support, other.support),
                           f"({self.name} + {other.name})")

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other) -> "ScalarField":
        if isinstance(other, ScalarField):
            return _product(self, other)
        c = float(other)
        h = (lambda x: c * self.hess(x)) if self.has_hess else None
        return ScalarField(lambda x: c * self(x), lambda x: c * self.grad(x), self.dim, h,
                           self.support, f"{c:g}*{self.name}")

    __rmul__ = __mul__


def _product(a: ScalarField, b: ScalarField) -> ScalarField:
    def grad(x):
        return a.grad(x) * b(x)[:, None] + b.grad(x) * a(x)[:, None]

    h = None
    if a.has_hess and b.has_hess:
        def h(x):
            ga, gb = a.grad(x), b.grad(x)
            return (a.hess(x) * b(x)[:, None, None] + b.hess(x) * a(x)[:, None, None]
                    + ga[:, :, None] * gb[:, None, :] + gb[:, :, None] * ga[:, None, :])
    return ScalarField(lambda x: a(x) * b(x), grad, a.dim, h,
                       intersect_boxes(a.support, b.support), f"{a.name}*{b.name}")


class VectorField:
    def __init__(self, value: Callable, jac: Callable, dim: int, basis: str = CARTESIAN,
                 divergence_free: bool = False, support=None, name: str = "field"):
        if basis not in (CARTESIAN, FRAME):
            raise FieldError(f"unknown basis {basis!r}")
        self._value = value
        self._jac = jac
        self.dim = dim
        self.basis = basis
        self.divergence_free = divergence_free
        self.support = None if support is None else (np.asarray(support[0], float), np.asarray(support[1], float))
        self.name = name

    def __repr__(self):
        return f"VectorField({self.name}, dim={self.dim}, basis={self.basis})"

    def __call__(self, x):
        return self._value(_pts(x))

    def jac(self, x):
        return self._jac(_pts(x))

    def __add__(self, other: "VectorField") -> "VectorField":
        if not isinstance(other, VectorField):
            return NotImplemented
        if other.basis != self.basis:
            raise FieldError("cannot add fields stored in different bases")
        return VectorField(lambda x: self(x) + other(x), lambda x: self.jac(x) + other.jac(x),
                           self.dim, self.basis, self.divergence_free and other.divergence_free,
                           union_boxes(self.support, other.support), f"({self.name} + {other.name})")

    def __mul__(self, c) -> "VectorField":
        c = float(c)
        return VectorField(lambda x: c * self(x), lambda x: c * self.jac(x), self.dim, self.basis,
                           self.divergence_free, self.support, f"{c:g}*{self.name}")

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


def multiply(psi: ScalarField, F: VectorField) -> VectorField:
    """Pointwise product ``psi F`` (same basis as ``F``)."""
    def jac(x):
        return F.jac(x) * psi(x)[:, None, None] + F(x)[:, :, None] * psi.grad(x)[:, None, :]

    return VectorField(lambda x: psi(x)[:, None] * F(x), jac, F.dim, F.basis, False,
                       intersect_boxes(psi.support, F.support), f"{psi.name}*{F.name}")


# ---------------------------------------------------------------- profiles


@dataclass(frozen=True)
class Profile:
    """Radial profile ``g(q)`` of the squared radius ``q``, with ``g'`` and ``g''``."""

    name: str
    g: Callable
    dg: Callable
    d2g: Callable
    q_max: float


def _gauss():
    e = lambda q: np.exp(-q)
    return Profile("gaussian", e, lambda q: -np.exp(-q), e, GAUSS_CUTOFF)


def _bump():
    def parts(q):
        inside = q < 1.0
        s = np.where(inside, 1.0 - q, 1.0)
        val = np.where(inside, np.exp(1.0 - 1.0 / s), 0.0)
        return inside, s, val

    def g(q):
        return parts(q)[2]

    def dg(q):
        inside, s, val = parts(q)
        return np.where(inside, -val / s**2, 0.0)

    def d2g(q):
        inside, s, val = parts(q)
        return np.where(inside, val * (1.0 - 2.0 * s) / s**4, 0.0)

    return Profile("bump", g, dg, d2g, 1.0)


def polynomial_profile(k: int) -> Profile:
    """``(1 - q)_+^k``: a ``C^{k-1}`` bump."""
    def g(q):
        return np.where(q < 1, np.clip(1 - q, 0, None) ** k, 0.0)

    def dg(q):
        return np.where(q < 1, -k * np.clip(1 - q, 0, None) ** (k - 1), 0.0)

    def d2g(q):
        return np.where(q < 1, k * (k - 1) * np.clip(1 - q, 0, None) ** max(k - 2, 0), 0.0)

    return Profile(f"poly{k}", g, dg, d2g, 1.0)


GAUSSIAN = _gauss()
BUMP = _bump()


def profile_field(center, shape, profile: Profile = GAUSSIAN, amplitude: float = 1.0,
                  log_vertical: bool = False, name: str | None = None) -> ScalarField:
    """``amplitude * g(|A (u - center)|^2)`` with ``u = x`` or ``u = (x', log x_n)``.

    ``shape`` is a scalar width, a vector of per-axis widths, or a full
    matrix ``A``.
    """
    c = np.asarray(center, dtype=float).reshape(-1)
    n = c.size
    shape = np.asarray(shape, dtype=float)
    if shape.ndim == 0:
        A = np.eye(n) / float(shape)
    elif shape.ndim == 1:
        A = np.diag(1.0 / shape)
    else:
        A = shape
    M = A.T @ A
    amp = float(amplitude)
    half = np.sqrt(profile.q_max * np.diag(np.linalg.inv(M)))
    lo, hi = c - half, c + half
    if log_vertical:
        lo[-1], hi[-1] = np.exp(lo[-1]), np.exp(hi[-1])

    def coords(x):
        if not log_vertical:
            return x
        u = x.copy()
        u[:, -1] = np.log(x[:, -1])
        return u

    def q_and_grad(x):
        d = coords(x) - c
        Md = d @ M
        q = np.sum(d * Md, axis=-1)
        gq = 2.0 * Md
        if log_vertical:
            gq = gq.copy()
            gq[:, -1] /= x[:, -1]
        return q, gq

    def value(x):
        return amp * profile.g(q_and_grad(x)[0])

    def grad(x):
        q, gq = q_and_grad(x)
        return amp * profile.dg(q)[:, None] * gq

    def hess(x):
        q, gq = q_and_grad(x)
        Hq = np.broadcast_to(2.0 * M, (len(x), n, n)).copy()
        if log_vertical:
            inv = np.ones_like(x)
            inv[:, -1] = 1.0 / x[:, -1]
            Hq = Hq * inv[:, :, None] * inv[:, None, :]
            # d/dx_n of (dq/du_n) / x_n picks up -(dq/du_n) / x_n**2
            Hq[:, -1, -1] -= gq[:, -1] / x[:, -1]
        return amp * (profile.d2g(q)[:, None, None] * gq[:, :, None] * gq[:, None, :]
                      + profile.dg(q)[:, None, None] * Hq)

    return ScalarField(value, grad, n, hess, (lo, hi), name or f"{profile.name}@{np.round(c, 3).tolist()}")


def gaussian_bump(center, scale=1.0, amplitude=1.0) -> ScalarField:
    return profile_field(center, scale, GAUSSIAN, amplitude)


def smooth_bump(center, radius=1.0, amplitude=1.0) -> ScalarField:
    """``C^infinity`` bump ``exp(1 - 1/(1 - |x-c|^2/R^2))`` supported in the ball of radius ``R``."""
    return profile_field(center, radius, BUMP, amplitude)


def poly_bump(center, radius=1.0, k=6, amplitude=1.0) -> ScalarField:
    return profile_field(center, radius, polynomial_profile(k), amplitude)


def log_gaussian(center, scale=0.3, amplitude=1.0) -> ScalarField:
    """Gaussian in ``(x', log x_n)``; its support box always sits inside ``x_n > 0``.

    ``center`` is given in chart coordinates (last entry is a height ``> 0``).
    """
    c = np.asarray(center, dtype=float).copy()
    if c[-1] <= 0:
        raise FieldError("log-Gaussian height must be positive")
    c[-1] = np.log(c[-1])
    return profile_field(c, scale, GAUSSIAN, amplitude, log_vertical=True,
                         name=f"loggauss@{np.round(np.asarray(center, float), 3).tolist()}")


def constant_scalar(value: float, dim: int) -> ScalarField:
    v = float(value)
    return ScalarField(lambda x: np.full(len(x), v), lambda x: np.zeros_like(x), dim,
                       lambda x: np.zeros((len(x), dim, dim)), None, f"const{v:g}")


def coordinate_scalar(axis: int, dim: int) -> ScalarField:
    def grad(x):
        g = np.zeros_like(x)
        g[:, axis] = 1.0
        return g

    return ScalarField(lambda x: x[:, axis].copy(), grad, dim,
                       lambda x: np.zeros((len(x), dim, dim)), None, f"x{axis}")


def polynomial_scalar(coeffs: dict, dim: int) -> ScalarField:
    """Polynomial from ``{exponent tuple: coefficient}``."""
    terms = [(np.asarray(e, int), float(c)) for e, c in coeffs.items()]

    def mono(x, e):
        return np.prod(x ** e, axis=-1)

    def value(x):
        return sum(c * mono(x, e) for e, c in terms)

    def grad(x):
        out = np.zeros_like(x)
        for e, c in terms:
            for i in range(dim):
                if e[i]:
                    d = e.copy()
                    d[i] -= 1
                    out[:, i] += c * e[i] * mono(x, d)
        return out

    def hess(x):
        out = np.zeros((len(x), dim, dim))
        for e, c in terms:
            for i in range(dim):
                for j in range(dim):
                    d = e.copy()
                    f = d[i]
                    d[i] -= 1
                    f *= d[j]
                    d[j] -= 1
                    if f and np.all(d >= 0):
                        out[:, i, j] += c * f * mono(x, d)
        return out

    return ScalarField(value, grad, dim, hess, None, "poly")


# ----------------------------------------------------------- vector fields


def constant_field(vec, basis=CARTESIAN) -> VectorField:
    v = np.asarray(vec, dtype=float)
    n = v.size
    return VectorField(lambda x: np.broadcast_to(v, x.shape).copy(), lambda x: np.zeros((len(x), n, n)),
                       n, basis, basis == CARTESIAN, None, f"const{v.tolist()}")


def linear_field(matrix, offset=None) -> VectorField:
    """``F(x) = M x + b`` in Cartesian components."""
    M = np.asarray(matrix, dtype=float)
    n = M.shape[0]
    b = np.zeros(n) if offset is None else np.asarray(offset, float)
    return VectorField(lambda x: x @ M.T + b, lambda x: np.broadcast_to(M, (len(x), n, n)).copy(),
                       n, CARTESIAN, abs(np.trace(M)) < 1e-15, None, "linear")


def gradient_field(psi: ScalarField) -> VectorField:
    return VectorField(psi.grad, psi.hess, psi.dim, CARTESIAN, False, psi.support, f"grad({psi.name})")


def stream_field(psi: ScalarField) -> VectorField:
    """Planar field ``(d_2 psi, -d_1 psi)``."""
    if psi.dim != 2:
        raise FieldError("stream functions need n = 2")
    if not psi.has_hess:
        raise FieldError("stream function must carry second derivatives")

    def value(x):
        g = psi.grad(x)
        return np.stack([g[:, 1], -g[:, 0]], axis=-1)

    def jac(x):
        H = psi.hess(x)
        return np.stack([H[:, 1, :], -H[:, 0, :]], axis=1)

    return VectorField(value, jac, 2, CARTESIAN, True, psi.support, f"stream({psi.name})")


def curl_field(potential: Sequence[ScalarField]) -> VectorField:
    """``curl A`` for a vector potential given as three scalar fields."""
    if len(potential) != 3 or any(a.dim != 3 for a in potential):
        raise FieldError("curl needs a three-component potential on R^3")
    A = list(potential)
    if not all(a.has_hess for a in A):
        raise FieldError("vector potential must carry second derivatives")
    support = A[0].support
    for a in A[1:]:
        support = union_boxes(support, a.support)
    # component i = d_q A_p - d_s A_r
    idx = ((1, 2, 2, 1), (2, 0, 0, 2), (0, 1, 1, 0))

    def value(x):
        g = [a.grad(x) for a in A]
        return np.stack([g[p][:, q] - g[r][:, s] for (q, p, s, r) in idx], axis=-1)

    def jac(x):
        H = [a.hess(x) for a in A]
        return np.stack([H[p][:, q, :] - H[r][:, s, :] for (q, p, s, r) in idx], axis=1)

    return VectorField(value, jac, 3, CARTESIAN, True, support, "curl")


def make_divfree_euclidean(potential) -> VectorField:
    """Divergence-free field from a stream function (n=2) or vector potential (n=3)."""
    if isinstance(potential, ScalarField):
        if potential.dim != 2:
            raise FieldError("a scalar potential only generates planar fields; pass three components for n=3")
        return stream_field(potential)
    return curl_field(potential)


def make_divfree_hyperbolic(F: VectorField) -> VectorField:
    """Frame field ``f = x_n**(n-1) F`` with ``div_g f = 0``."""
    if F.basis != CARTESIAN:
        raise FieldError("lift expects Cartesian components")
    if not F.divergence_free:
        raise FieldError("lift needs a field certified divergence-free")
    n = F.dim
    if F.support is not None and F.support[0][-1] <= 0:
        raise FieldError("support of the lifted field must stay in x_n > 0")

    def value(x):
        return x[:, -1:] ** (n - 1) * F(x)

    def jac(x):
        xn = x[:, -1]
        J = F.jac(x) * (xn ** (n - 1))[:, None, None]
        J[:, :, -1] += (n - 1) * (xn ** (n - 2))[:, None] * F(x)
        return J

    return VectorField(value, jac, n, FRAME, True, F.support, f"lift({F.name})")


def as_frame(F: VectorField, divergence_free: bool = False) -> VectorField:
    """Reinterpret Cartesian-valued components as frame components."""
    return VectorField(F._value, F._jac, F.dim, FRAME, divergence_free, F.support, F.name)


# ----------------------------------------------------------- derivatives


def divergence_euclidean(F: VectorField, x) -> np.ndarray:
    if F.basis != CARTESIAN:
        raise FieldError("Euclidean divergence needs Cartesian components")
    return np.trace(F.jac(x), axis1=-2, axis2=-1)


def divergence_hyperbolic(f: VectorField, x) -> np.ndarray:
    """``x_n**n * sum_i d_i(x_n**(1-n) f^i)`` for frame components ``f^i``."""
    if f.basis != FRAME:
        raise FieldError("hyperbolic divergence needs frame components")
    x = _pts(x)
    n = f.dim
    return x[:, -1] * np.trace(f.jac(x), axis1=-2, axis2=-1) + (1 - n) * f(x)[:, -1]


def covariant_derivative(phi: VectorField, x) -> np.ndarray:
    """Frame matrix ``M[i, j] = <nabla_{e_i} phi, e_j>_g``."""
    if phi.basis != FRAME:
        raise FieldError("covariant derivative needs frame components")
    x = _pts(x)
    n = phi.dim
    J = phi.jac(x)
    M = x[:, -1][:, None, None] * np.swapaxes(J, -1, -2)
    G = connection_table(n)
    M += np.einsum("pk,ikj->pij", phi(x), G)
    return M


def hyperbolic_gradient(psi: ScalarField, x) -> np.ndarray:
    """Frame components ``e_i psi = x_n d_i psi`` of the metric gradient."""
    x = _pts(x)
    return x[:, -1:] * psi.grad(x)


# ------------------------------------------------------------- transforms


def dilate_vector(F: VectorField, eps: float, power: float = 0.0) -> VectorField:
    """``eps**-power F(x / eps)``; ``power = n`` is the mass-preserving dilation."""
    c = float(eps) ** -power
    sup = None if F.support is None else (eps * F.support[0], eps * F.support[1])
    return VectorField(lambda x: c * F(x / eps), lambda x: (c / eps) * F.jac(x / eps), F.dim, F.basis,
                       F.divergence_free, sup, f"dil{eps:g}({F.name})")


def dilate_scalar(psi: ScalarField, eps: float, power: float = 0.0) -> ScalarField:
    c = float(eps) ** -power
    sup = None if psi.support is None else (eps * psi.support[0], eps * psi.support[1])
    h = (lambda x: (c / eps**2) * psi.hess(x / eps)) if psi.has_hess else None
    return ScalarField(lambda x: c * psi(x / eps), lambda x: (c / eps) * psi.grad(x / eps), psi.dim, h,
                       sup, f"dil{eps:g}({psi.name})")


def push_vector(f: VectorField, iso) -> VectorField:
    """Push a frame field forward along a half-space isometry (frame components are preserved)."""
    s = iso.scale
    sup = None if f.support is None else iso.map_box(f.support)
    return VectorField(lambda y: f(iso.inverse_apply(y)), lambda y: f.jac(iso.inverse_apply(y)) / s,
                       f.dim, f.basis, f.divergence_free, sup, f"iso({f.name})")


def push_scalar(psi: ScalarField, iso) -> ScalarField:
    s = iso.scale
    sup = None if psi.support is None else iso.map_box(psi.support)
    h = (lambda y: psi.hess(iso.inverse_apply(y)) / s**2) if psi.has_hess else None
    return ScalarField(lambda y: psi(iso.inverse_apply(y)), lambda y: psi.grad(iso.inverse_apply(y)) / s,
                       psi.dim, h, sup, f"iso({psi.name})")


# ----------------------------------------------------------------- catalog


def rotational_field(center, scale=1.0, amplitude=1.0, axis: int = 2) -> VectorField:
    """Swirl around ``center``: stream field of a Gaussian (n=2) or curl of ``psi e_axis`` (n=3)."""
    c = np.asarray(center, dtype=float)
    psi = gaussian_bump(c, scale, amplitude)
    if c.size == 2:
        return stream_field(psi)
    zero = constant_scalar(0.0, 3)
    zero.support = psi.support
    comps = [zero, zero, zero]
    comps[axis] = psi
    return curl_field(comps)


def tube_field(center, length=3.0, width=0.3, angle=0.0, amplitude=1.0) -> VectorField:
    """Planar divergence-free field concentrated on a long thin tube."""
    R = np.array([[np.cos(angle), np.sin(angle)], [-np.sin(angle), np.cos(angle)]])
    A = np.diag([1.0 / length, 1.0 / width]) @ R
    return stream_field(profile_field(center, A, GAUSSIAN, amplitude, name="tube"))


def bump_curl_field(center, radius=1.0, k=6, amplitude=1.0) -> VectorField:
    """Compactly supported planar curl of a polynomial bump."""
    return stream_field(poly_bump(center, radius, k, amplitude))


def radial_vector_field(center, scale=1.0, amplitude=1.0) -> VectorField:
    """``(x - c) * gaussian``: not divergence-free."""
    c = np.asarray(center, dtype=float)
    lin = linear_field(np.eye(c.size), -c)
    return multiply(gaussian_bump(c, scale, amplitude), lin)


def lifted_swirl(center, scale=0.25, log_scale=0.25, amplitude=1.0, axis: int = 2) -> VectorField:
    """Divergence-free frame field: lift of a log-Gaussian stream field (n=2) or curl (n=3)."""
    c = np.asarray(center, float)
    n = c.size
    widths = np.append(np.full(n - 1, float(scale)), log_scale)
    psi = profile_field(np.append(c[:-1], np.log(c[-1])), widths, GAUSSIAN, amplitude, log_vertical=True,
                        name="logswirl")
    if n == 2:
        return make_divfree_hyperbolic(stream_field(psi))
    zero = constant_scalar(0.0, n)
    zero.support = psi.support
    comps = [zero] * n
    comps[axis] = psi
    return make_divfree_hyperbolic(curl_field(comps))


def frame_bump_field(center, direction, scale=0.3, amplitude=1.0) -> VectorField:
    """Compactly supported frame field ``log_gaussian * direction``."""
    d = np.asarray(direction, dtype=float)
    return multiply(log_gaussian(center, scale, amplitude), constant_field(d, FRAME))
