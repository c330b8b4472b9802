"""Mollification decompositions ``phi = phi1 + phi2`` on the sphere and on H^m.

Both constructions are exposed as scikit-learn style estimators: ``fit``
takes the function to split, ``transform`` evaluates ``[phi1, phi2]`` at an
array of points. The functional wrappers :func:`sphere_decompose` and
:func:`hyperbolic_decompose` return a :class:`DecompositionResult` with the
sup-norm certificates already measured.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import beta, gamma
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .fields import ScalarField
from .functionals import gradient_lp_norm, surface_lp_norm
from .geometry import Sphere
from .quadrature import QuadratureError, gauss_legendre, gauss_on_breaks, sphere_rule, trapezoid_periodic
from .validation import check_points


class DecompositionError(ValueError):
    pass


def sphere_area(n: int) -> float:
    """Area of the unit sphere in R^n."""
    return 2.0 * np.pi ** (n / 2.0) / gamma(n / 2.0)


# --------------------------------------------------------------- mollifiers


@dataclass(frozen=True)
class PlateauMollifier:
    """Radial cutoff equal to 1 on ``|u| <= inner`` and 0 on ``|u| >= 1``.

    The transition is the ``C^3`` septic smoothstep, so the profile is a
    piecewise polynomial with breaks at ``inner`` and 1.
    """

    inner: float = 0.5

    @property
    def breaks(self):
        return (self.inner, 1.0)

    def _s(self, r):
        return np.clip((r - self.inner) / (1.0 - self.inner), 0.0, 1.0)

    def __call__(self, r):
        s = self._s(np.asarray(r, float))
        return 1.0 - s**4 * (35.0 - 84.0 * s + 70.0 * s * s - 20.0 * s**3)

    def deriv(self, r):
        s = self._s(np.asarray(r, float))
        return -140.0 * s**3 * (1.0 - s) ** 3 / (1.0 - self.inner)


@dataclass(frozen=True)
class PolynomialMollifier:
    """``c (1 - |v|^2)_+^k`` on R^m with ``c`` chosen so the integral is 1."""

    m: int
    k: int = 4

    @property
    def norm(self) -> float:
        return 1.0 / (sphere_area(self.m) * 0.5 * beta(self.m / 2.0, self.k + 1.0)) if self.m > 1 \
            else 1.0 / beta(0.5, self.k + 1.0)

    def __call__(self, r):
        r = np.asarray(r, float)
        return self.norm * np.clip(1.0 - r * r, 0.0, None) ** self.k


# ------------------------------------------------------------ sup probing


def probe_sup(func, params, to_points, refine: int = 3):
    """Max of ``func`` over a parameter grid, polished by Nelder-Mead from the best probes."""
    vals = func(to_points(params))
    best = float(np.max(vals))
    if refine and params.shape[1] > 0:
        spacing = np.ptp(params, axis=0) / max(len(params) ** (1.0 / params.shape[1]), 2.0)
        for idx in np.argsort(vals)[::-1][:refine]:
            res = minimize(lambda p: -float(func(to_points(p[None, :]))[0]), params[idx],
                           method="Nelder-Mead",
                           options={"xatol": 1e-10 * max(1.0, float(np.max(spacing))),
                                    "fatol": 1e-15, "maxiter": 400,
                                    "initial_simplex": params[idx] + np.vstack(
                                        [np.zeros(params.shape[1]), np.diag(spacing + 1e-12)])})
            best = max(best, -float(res.fun))
    return best


def sphere_params(n: int, res: int):
    if n == 2:
        return np.linspace(0, 2 * np.pi, res, endpoint=False)[:, None]
    th = (np.arange(res // 2) + 0.5) * np.pi / (res // 2)
    al = np.linspace(0, 2 * np.pi, res, endpoint=False)
    T, A = np.meshgrid(th, al, indexing="ij")
    return np.stack([T.ravel(), A.ravel()], axis=-1)


def sphere_points(params):
    if params.shape[1] == 1:
        t = params[:, 0]
        return np.stack([np.cos(t), np.sin(t)], axis=-1)
    th, al = params[:, 0], params[:, 1]
    return np.stack([np.sin(th) * np.cos(al), np.sin(th) * np.sin(al), np.cos(th)], axis=-1)


# ----------------------------------------------------- local sphere rules


def _tangent_frame(x):
    """Orthonormal tangent basis ``(u, w)`` at points of the two-sphere."""
    a = np.zeros_like(x)
    a[np.arange(len(x)), np.argmin(np.abs(x), axis=1)] = 1.0
    u = a - np.sum(a * x, -1, keepdims=True) * x
    u /= np.linalg.norm(u, axis=-1, keepdims=True)
    return u, np.cross(x, u)


class _LocalSphereRule:
    """Geodesic polar rule around each base point, panels split at the kernel breaks."""

    def __init__(self, n, lam, breaks, k=24, m=48):
        if not 0 < lam < 1:
            raise DecompositionError("local sphere rules are for 0 < lambda < 1")
        angles = [0.0] + [2 * np.arcsin(b * lam / 2.0) for b in breaks]
        self.n = n
        if n == 2:
            pos = np.array(angles)
            brk = np.concatenate([-pos[::-1], pos[1:]])
            self.t, self.w = gauss_on_breaks(brk, k)
        elif n == 3:
            psi, wpsi = gauss_on_breaks(np.array(angles), k)
            al, wal = trapezoid_periodic(m)
            P, A = np.meshgrid(psi, al, indexing="ij")
            self.psi, self.alpha = P.ravel(), A.ravel()
            self.w = (wpsi[:, None] * np.sin(psi)[:, None] * wal[None, :]).ravel()
        else:
            raise DecompositionError("sphere decompositions exist for n in (2, 3)")

    def nodes(self, x):
        """Nodes ``y`` of shape ``(N, Q, n)`` around base points ``x``."""
        if self.n == 2:
            c, s = np.cos(self.t), np.sin(self.t)
            y0 = x[:, None, 0] * c - x[:, None, 1] * s
            y1 = x[:, None, 0] * s + x[:, None, 1] * c
            return np.stack([y0, y1], axis=-1)
        u, w = _tangent_frame(x)
        cp, sp = np.cos(self.psi), np.sin(self.psi)
        ca, sa = np.cos(self.alpha), np.sin(self.alpha)
        tang = ca[None, :, None] * u[:, None, :] + sa[None, :, None] * w[:, None, :]
        return cp[None, :, None] * x[:, None, :] + sp[None, :, None] * tang


def c_lambda(lam: float, eta: PlateauMollifier | None = None, n: int = 2, x=None, k: int = 24, m: int = 48) -> float:
    """``int_{S^{n-1}} eta((x - y)/lam) d sigma(y)`` at a point ``x`` of the unit sphere."""
    if not 0 < lam < 1:
        raise DecompositionError("c_lambda is defined for 0 < lambda < 1")
    eta = eta or PlateauMollifier()
    x = np.eye(n)[0] if x is None else np.asarray(x, float) / np.linalg.norm(x)
    rule = _LocalSphereRule(n, lam, eta.breaks, k, m)
    y = rule.nodes(x[None, :])[0]
    return float(np.sum(rule.w * eta(np.linalg.norm(x - y, axis=-1) / lam)))


@dataclass
class DecompositionResult:
    phi1: ScalarField
    phi2: ScalarField
    extension: ScalarField
    lam: float
    sup_phi1: float
    sup_grad_phi2: float
    sup_grad_extension: float
    estimator: BaseEstimator = field(repr=False)


# ------------------------------------------------------------------ sphere


class SphereDecomposer(TransformerMixin, BaseEstimator):
    """Split a function on the unit sphere at mollification scale ``lam``.

    For ``lam >= 1`` the smooth part is the spherical mean. Otherwise it is
    the ``c_lambda``-normalized average of ``phi`` against the plateau
    mollifier. ``phi`` is passed as an ambient :class:`ScalarField` and is
    only ever evaluated on the sphere.

    Parameters
    ----------
    lam : float
        Mollification scale, > 0.
    k : int
        Gauss-Legendre nodes per radial panel of the local rule.
    m : int
        Azimuthal nodes of the local rule (two-sphere only).
    probes : int
        Probe resolution used for the sup-norm certificates.
    """

    def __init__(self, lam=0.1, k=24, m=48, probes=2048):
        self.lam = lam
        self.k = k
        self.m = m
        self.probes = probes

    def fit(self, phi, y=None):
        if not self.lam > 0:
            raise DecompositionError(f"lambda must be positive, got {self.lam}")
        n = phi.dim
        if n not in (2, 3):
            raise DecompositionError("sphere decompositions exist for n in (2, 3)")
        self.phi_ = phi
        self.n_ = n
        self.eta_ = PlateauMollifier()
        if self.lam >= 1:
            rule = sphere_rule(n, 64)
            self.mean_ = float(rule.integrate(phi)) / sphere_area(n)
            self.c_lambda_ = None
        else:
            self.rule_ = _LocalSphereRule(n, self.lam, self.eta_.breaks, self.k, self.m)
            self.c_lambda_ = c_lambda(self.lam, self.eta_, n, k=self.k, m=self.m)
            self.mean_ = None
        return self

    def _project(self, X):
        X = check_points(X, self.n_)
        return X / np.linalg.norm(X, axis=-1, keepdims=True)

    def _chunks(self, X, fn):
        step = max(1, 200_000 // max(len(getattr(self, "rule_", None).w), 1)) if self.mean_ is None else len(X)
        return np.concatenate([fn(X[i:i + step]) for i in range(0, len(X), step)]) if len(X) else fn(X)

    def phi2(self, X):
        check_is_fitted(self, "phi_")
        X = self._project(X)
        if self.mean_ is not None:
            return np.full(len(X), self.mean_)

        def block(x):
            y = self.rule_.nodes(x)
            N, Q, n = y.shape
            vals = self.phi_(y.reshape(-1, n)).reshape(N, Q)
            ker = self.eta_(np.linalg.norm(x[:, None, :] - y, axis=-1) / self.lam)
            return (ker * vals) @ self.rule_.w / self.c_lambda_

        return self._chunks(X, block)

    def phi1(self, X):
        X = self._project(X)
        return self.phi_(X) - self.phi2(X)

    def transform(self, X):
        X = self._project(X)
        p2 = self.phi2(X)
        return np.stack([self.phi_(X) - p2, p2], axis=-1)

    def phi2_gradient(self, X):
        """Tangential gradient of ``phi2`` at points of the sphere (ambient components)."""
        check_is_fitted(self, "phi_")
        X = self._project(X)
        if self.mean_ is not None:
            return np.zeros_like(X)

        def block(x):
            y = self.rule_.nodes(x)
            N, Q, n = y.shape
            d = x[:, None, :] - y
            r = np.linalg.norm(d, axis=-1)
            # the derivative kernel vanishes on the plateau, so r > 0 wherever it is used
            dk = self.eta_.deriv(r / self.lam) / np.where(r > 0, r, 1.0)
            diff = self.phi_(y.reshape(-1, n)).reshape(N, Q) - self.phi_(x)[:, None]
            G = np.einsum("q,pq,pqi->pi", self.rule_.w, dk * diff, d) / (self.lam * self.c_lambda_)
            return G - np.sum(G * x, -1, keepdims=True) * x

        return self._chunks(X, block)

    def extension(self, X):
        """Degree-0 homogeneous extension ``phi2(x / |x|)``."""
        X = check_points(X, self.n_)
        return self.phi2(X)

    def extension_gradient(self, X):
        X = check_points(X, self.n_)
        r = np.linalg.norm(X, axis=-1, keepdims=True)
        if np.any(r < 1 - 1e-12):
            raise DecompositionError("the extension lives on |x| >= 1")
        return self.phi2_gradient(X) / r

    def certificates(self):
        """Measured ``sup|phi1|``, ``sup|grad_S phi2|`` and ``sup|grad ext|``."""
        params = sphere_params(self.n_, self.probes if self.n_ == 2 else int(np.sqrt(2 * self.probes)))
        sup1 = probe_sup(lambda p: np.abs(self.phi1(p)), params, sphere_points)
        if self.mean_ is not None:
            sup2 = 0.0
        else:
            sup2 = probe_sup(lambda p: np.linalg.norm(self.phi2_gradient(p), axis=-1), params, sphere_points)
        # |grad ext|(x) = |grad_S phi2|(x/|x|) / |x| peaks on the unit sphere
        return sup1, sup2, sup2

    def as_result(self) -> DecompositionResult:
        n = self.n_
        phi2 = ScalarField(self.extension, self.extension_gradient, n, None, None, "phi2")
        phi1 = ScalarField(self.phi1, lambda X: self.phi_.grad(X) - self.extension_gradient(X), n, None,
                           None, "phi1")
        s1, s2, s3 = self.certificates()
        return DecompositionResult(phi1, phi2, phi2, float(self.lam), s1, s2, s3, self)


def sphere_decompose(phi: ScalarField, lam: float, **kw) -> DecompositionResult:
    return SphereDecomposer(lam, **kw).fit(phi).as_result()


def radial_extension_gradient(result: DecompositionResult, x) -> np.ndarray:
    """``|grad phi2~(x)|`` for ``|x| >= 1``."""
    g = result.estimator.extension_gradient(np.atleast_2d(x))
    return np.linalg.norm(g, axis=-1)


# ------------------------------------------------------------- hyperbolic


class HyperbolicDecomposer(TransformerMixin, BaseEstimator):
    """Split a compactly supported function on ``H^m`` (``m`` = 1 or 2).

    ``phi2(x) = int phi(x' + x_m e^{v_m} v', x_m e^{v_m}) lam^-m eta(v/lam) dv``
    with a normalized polynomial mollifier ``eta``; ``phi2 = 0`` for
    ``lam >= 1``. Requires the Morrey exponent ``p > m``.
    """

    def __init__(self, lam=0.1, p=3.0, k=16, m_ang=32, probes=96):
        self.lam = lam
        self.p = p
        self.k = k
        self.m_ang = m_ang
        self.probes = probes

    def fit(self, phi, y=None):
        m = phi.dim
        if m not in (1, 2):
            raise DecompositionError("hyperbolic decompositions are implemented for m in (1, 2)")
        if not self.p > m:
            raise DecompositionError(f"need p > m for the Morrey bound, got p={self.p}, m={m}")
        if not self.lam > 0:
            raise DecompositionError("lambda must be positive")
        if phi.support is None:
            raise QuadratureError("phi must be compactly supported")
        self.phi_ = phi
        self.m_ = m
        self.eta_ = PolynomialMollifier(m)
        lam = float(self.lam)
        if lam < 1:
            if m == 1:
                v, w = gauss_legendre(-lam, lam, 2 * self.k)
                v = v[:, None]
                r = np.abs(v[:, 0])
            else:
                rho, wr = gauss_legendre(0.0, lam, self.k)
                al, wa = trapezoid_periodic(self.m_ang)
                R, A = np.meshgrid(rho, al, indexing="ij")
                v = np.stack([(R * np.cos(A)).ravel(), (R * np.sin(A)).ravel()], axis=-1)
                w = (wr[:, None] * rho[:, None] * wa[None, :]).ravel()
                r = np.linalg.norm(v, axis=-1)
            self.v_ = v
            self.w_ = w * self.eta_(r / lam) / lam**m
        return self

    def _targets(self, x):
        """Sample points ``Y(x, v)``, shape ``(N, V, m)``."""
        v = self.v_
        scale = x[:, None, -1] * np.exp(v[None, :, -1])
        Y = np.empty((len(x), len(v), self.m_))
        Y[..., -1] = scale
        if self.m_ > 1:
            Y[..., :-1] = x[:, None, :-1] + scale[..., None] * v[None, :, :-1]
        return Y

    def _blocked(self, X, fn):
        step = max(1, 400_000 // len(self.v_))
        return np.concatenate([fn(X[i:i + step]) for i in range(0, len(X), step)])

    def phi2(self, X):
        check_is_fitted(self, "phi_")
        X = check_points(X, self.m_, hyperbolic=True)
        if self.lam >= 1:
            return np.zeros(len(X))

        def block(x):
            Y = self._targets(x)
            N, V, m = Y.shape
            return self.phi_(Y.reshape(-1, m)).reshape(N, V) @ self.w_

        return self._blocked(X, block)

    def phi1(self, X):
        X = check_points(X, self.m_, hyperbolic=True)
        return self.phi_(X) - self.phi2(X)

    def transform(self, X):
        X = check_points(X, self.m_, hyperbolic=True)
        p2 = self.phi2(X)
        return np.stack([self.phi_(X) - p2, p2], axis=-1)

    def phi2_frame_gradient(self, X):
        """Frame components ``e_i phi2``, differentiated under the integral."""
        check_is_fitted(self, "phi_")
        X = check_points(X, self.m_, hyperbolic=True)
        if self.lam >= 1:
            return np.zeros_like(X)
        v = self.v_

        def block(x):
            Y = self._targets(x)
            N, V, m = Y.shape
            flat = Y.reshape(-1, m)
            eg = (flat[:, -1:] * self.phi_.grad(flat)).reshape(N, V, m)
            out = np.empty((N, m))
            if m > 1:
                out[:, :-1] = np.einsum("v,pvi->pi", self.w_ * np.exp(-v[:, -1]), eg[..., :-1])
                vert = eg[..., -1] + np.einsum("vi,pvi->pv", v[:, :-1], eg[..., :-1])
            else:
                vert = eg[..., -1]
            out[:, -1] = vert @ self.w_
            return out

        return self._blocked(X, block)

    def phi2_gradient(self, X):
        X = check_points(X, self.m_, hyperbolic=True)
        return self.phi2_frame_gradient(X) / X[:, -1:]

    def probe_box(self):
        lo, hi = (b.copy() for b in self.phi_.support)
        lam = min(float(self.lam), 1.0)
        reach = hi[-1] * lam
        lo[:-1] -= reach
        hi[:-1] += reach
        lo[-1] *= np.exp(-lam)
        hi[-1] *= np.exp(lam)
        return lo, hi

    def _probe_grid(self):
        lo, hi = self.probe_box()
        axes = [np.linspace(lo[i], hi[i], self.probes) for i in range(self.m_ - 1)]
        axes.append(np.linspace(np.log(lo[-1]), np.log(hi[-1]), self.probes))
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    @staticmethod
    def _to_points(params):
        x = params.copy()
        x[:, -1] = np.exp(params[:, -1])
        return x

    def certificates(self):
        params = self._probe_grid()
        sup1 = probe_sup(lambda P: np.abs(self.phi1(P)), params, self._to_points)
        if self.lam >= 1:
            sup2 = 0.0
        else:
            sup2 = probe_sup(lambda P: np.linalg.norm(self.phi2_frame_gradient(P), axis=-1),
                             params, self._to_points)
        return sup1, sup2

    def as_result(self) -> DecompositionResult:
        m = self.m_
        phi2 = ScalarField(self.phi2, self.phi2_gradient, m, None, self.probe_box(), "phi2")
        phi1 = ScalarField(self.phi1, lambda X: self.phi_.grad(X) - self.phi2_gradient(X), m, None,
                           self.probe_box(), "phi1")
        s1, s2 = self.certificates()
        return DecompositionResult(phi1, phi2, phi2, float(self.lam), s1, s2, s2, self)


def hyperbolic_decompose(phi: ScalarField, lam: float, p: float, **kw) -> DecompositionResult:
    return HyperbolicDecomposer(lam, p, **kw).fit(phi).as_result()


def extend_to_ambient(phi2: ScalarField) -> ScalarField:
    """Extend a function on ``S = {x_1 = 0}`` (a copy of ``H^{n-1}``) to ``H^n``.

    ``phi2~(x_1, x'', x_n) = phi2(x'', sqrt(x_1^2 + x_n^2))``: constant along
    the half-circles centred on ``S`` at height 0.
    """
    m = phi2.dim
    n = m + 1

    def split(x):
        rho = np.hypot(x[:, 0], x[:, -1])
        y = np.concatenate([x[:, 1:-1], rho[:, None]], axis=1)
        return y, rho

    def value(x):
        return phi2(split(x)[0])

    def grad(x):
        y, rho = split(x)
        g = phi2.grad(y)
        out = np.empty((len(x), n))
        out[:, 0] = g[:, -1] * x[:, 0] / rho
        out[:, 1:-1] = g[:, :-1]
        out[:, -1] = g[:, -1] * x[:, -1] / rho
        return out

    support = None
    if phi2.support is not None:
        lo, hi = phi2.support
        top = hi[-1]
        support = (np.concatenate([[-top], lo[:-1], [0.0]]), np.concatenate([[top], hi[:-1], [top]]))
    return ScalarField(value, grad, n, None, support, f"ext({phi2.name})")


# ----------------------------------------------------------- ratio suites


@dataclass(frozen=True)
class RatioSuite:
    """Bounded-ratio verdict over a lambda grid.

    The constant is fitted on the coarse half of the grid (largest
    lambdas); the suite passes when it also bounds the fine half, i.e. the
    ratios do not blow up as lambda shrinks.
    """

    lams: tuple
    ratios: tuple
    constant: float
    fine_max: float
    passed: bool


def bounded_ratio_suite(lams, ratios, slack: float = 1e-6) -> RatioSuite:
    lams = np.asarray(lams, float)
    ratios = np.asarray(ratios, float)
    order = np.argsort(lams)[::-1]
    lams, ratios = lams[order], ratios[order]
    half = max(1, len(lams) // 2)
    coarse, fine = ratios[:half], ratios[half:]
    C = float(np.max(coarse))
    fmax = float(np.max(fine)) if len(fine) else 0.0
    ok = bool(np.all(np.isfinite(ratios)) and fmax <= C * (1 + slack))
    return RatioSuite(tuple(lams), tuple(ratios), C, fmax, ok)


def sphere_gradient_norm(phi: ScalarField, n: int, k: int = 128) -> float:
    """``||grad_S phi||_{L^n(S^{n-1})}``."""
    return surface_lp_norm(phi, Sphere(np.zeros(n), 1.0), float(n), k, gradient=True)


def sphere_lemma_ratios(phi: ScalarField, lams, **kw):
    """Per-lambda ratios ``sup|phi1| / (lam^{1/n} G)`` and ``sup|grad ext| / (lam^{1/n-1} G)``."""
    n = phi.dim
    G = sphere_gradient_norm(phi, n)
    if not G > 0:
        raise DecompositionError("phi is constant on the sphere; ratios undefined")
    r1, r2 = [], []
    for lam in lams:
        res = sphere_decompose(phi, lam, **kw)
        r1.append(res.sup_phi1 / (lam ** (1.0 / n) * G))
        r2.append(res.sup_grad_extension / (lam ** (1.0 / n - 1.0) * G))
    return np.array(r1), np.array(r2), G


def hyperbolic_lemma_ratios(phi: ScalarField, lams, p: float, **kw):
    """Per-lambda ratios with exponents ``1 - m/p`` and ``-m/p``."""
    m = phi.dim
    G = gradient_lp_norm(phi, p, "hyperbolic").value
    if not G > 0:
        raise DecompositionError("phi has zero gradient norm")
    r1, r2 = [], []
    for lam in lams:
        res = hyperbolic_decompose(phi, lam, p, **kw)
        r1.append(res.sup_phi1 / (lam ** (1.0 - m / p) * G))
        r2.append(res.sup_grad_phi2 / (lam ** (-m / p) * G))
    return np.array(r1), np.array(r2), G
