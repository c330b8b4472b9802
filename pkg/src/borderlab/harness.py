"""Ratio evaluation, constant lower bounds, and the Hardy / Sobolev / Morrey checks.

Every inequality in this package has the shape ``|pairing| <= C * norms``.
:func:`ratio` evaluates one such quotient for a concrete pair of fields,
:class:`ConstantEstimator` maximizes it over a parametric family (the
result is a lower bound for the best constant, never an upper bound), and
the remaining checks exercise the auxiliary inequalities the estimates
rest on.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy.optimize import brentq, minimize
from sklearn.base import BaseEstimator

from .decomposition import (PlateauMollifier, extend_to_ambient, hyperbolic_decompose, probe_sup,
                            sphere_area, sphere_decompose)
from .fields import (CARTESIAN, FRAME, FieldError, ScalarField, VectorField, constant_field, covariant_derivative,
                     divergence_euclidean, frame_bump_field, gaussian_bump, lifted_swirl, multiply,
                     radial_vector_field, rotational_field, tube_field)
from .functionals import (gradient_lp_norm, l1_norm, ln_gradient_norm, lp_norm, pairing,
                          plane_normal_component, sphere_normal_component, surface_l1_norm, w1n_surface_norm,
                          boundary_flux)
from .geometry import GeometryError, Sphere, VerticalPlane, hyperbolic_distance
from .quadrature import QuadratureError, box_rule, gauss_legendre, gauss_on_breaks, sphere_rule, surface_rule

log = logging.getLogger(__name__)


class HarnessError(ValueError):
    pass


class Setting(str, Enum):
    EUCLIDEAN_MAIN = "EuclideanMain"
    HYPERBOLIC_MAIN = "HyperbolicMain"
    EUCLIDEAN_LOW_ORDER = "EuclideanLowOrder"


# ------------------------------------------------------------------- ratio


@dataclass(frozen=True)
class RatioRecord:
    family: str
    params: tuple
    numerator: float
    f_l1: float
    grad_phi: float
    div_term: float | None
    denominator: float
    ratio: float

    def as_row(self) -> dict:
        return {"family": self.family, "params": " ".join(f"{p:.10g}" for p in self.params),
                "numerator": self.numerator, "f_l1": self.f_l1, "grad_phi": self.grad_phi,
                "div_term": "" if self.div_term is None else self.div_term,
                "denominator": self.denominator, "ratio": self.ratio}


def _divergence_scalar(f: VectorField) -> ScalarField:
    def nograd(x):
        raise FieldError("divergence magnitude carries no gradient")

    return ScalarField(lambda x: divergence_euclidean(f, x), nograd, f.dim, None, f.support, f"div({f.name})")


def ratio(f: VectorField, phi: VectorField, setting="EuclideanMain", k: int | None = None, family: str = "adhoc",
          params=(), tol: float = 1e-6) -> RatioRecord:
    """``|int <f, phi>|`` over the norm product appropriate to ``setting``.

    With ``k=None`` the norms are refined adaptively to ``tol``; an explicit
    ``k`` fixes the resolution of every integral, which is what a
    resolution-doubling study needs.
    """
    setting = Setting(setting)
    if k is not None:
        tol = None
    if setting is Setting.HYPERBOLIC_MAIN:
        space = "hyperbolic"
        if f.basis != FRAME or phi.basis != FRAME:
            raise FieldError("hyperbolic ratios take frame fields")
    else:
        space = "euclidean"
        if f.basis != CARTESIAN or phi.basis != CARTESIAN:
            raise FieldError("Euclidean ratios take Cartesian fields")
    if setting is not Setting.EUCLIDEAN_LOW_ORDER and not f.divergence_free:
        raise FieldError(f"{setting.value} needs a divergence-free f")
    num = abs(pairing(f, phi, space, k))
    f1 = l1_norm(f, space, k=k, tol=tol).value
    g = ln_gradient_norm(phi, space, k=k, tol=tol).value
    den = f1 * g
    div_term = None
    if setting is Setting.EUCLIDEAN_LOW_ORDER:
        div_term = (lp_norm(_divergence_scalar(f), 1.0, space, k=k, tol=tol).value
                    * lp_norm(phi, float(phi.dim), space, k=k, tol=tol).value)
        den += div_term
    if not den > 0:
        raise HarnessError(f"denominator vanishes for {f.name}, {phi.name}")
    r = num / den
    if not np.isfinite(r):
        raise HarnessError("non-finite ratio")
    return RatioRecord(family, tuple(float(p) for p in params), num, f1, g, div_term, den, r)


# ------------------------------------------------------------ families


@dataclass(frozen=True)
class FamilySpec:
    """Parametric family ``params -> (f, phi)`` with a box of admissible parameters."""

    name: str
    setting: Setting
    build: Callable = field(repr=False)
    lower: tuple
    upper: tuple
    start: tuple

    def __post_init__(self):
        lo, hi, x0 = (np.asarray(v, float) for v in (self.lower, self.upper, self.start))
        if not (lo.shape == hi.shape == x0.shape) or np.any(hi < lo) or np.any(x0 < lo) or np.any(x0 > hi):
            raise HarnessError(f"family {self.name}: inconsistent parameter box")
        object.__setattr__(self, "setting", Setting(self.setting))

    @property
    def dim(self) -> int:
        return len(self.lower)

    def clip(self, p):
        return np.clip(np.asarray(p, float), self.lower, self.upper)


def _direction(angle):
    return np.array([np.cos(angle), np.sin(angle)])


def rotational_family() -> FamilySpec:
    """Gaussian swirl against a Gaussian-weighted constant vector (plane)."""

    def build(p):
        sf, dx, dy, sp, ang = p
        f = rotational_field([0.0, 0.0], sf)
        phi = multiply(gaussian_bump([dx, dy], sp), constant_field(_direction(ang)))
        return f, phi

    return FamilySpec("rotational", Setting.EUCLIDEAN_MAIN, build, (0.3, -1.5, -1.5, 0.3, 0.0),
                      (1.5, 1.5, 1.5, 1.5, np.pi), (0.7, 0.5, 0.0, 0.6, 1.2))


def tube_family() -> FamilySpec:
    """Long thin swirl tube; tubes are the classical near-extremizers here."""

    def build(p):
        length, width, off, sp, ang = p
        f = tube_field([0.0, 0.0], length, width)
        phi = multiply(gaussian_bump([0.0, off], sp), constant_field(_direction(ang)))
        return f, phi

    return FamilySpec("tube", Setting.EUCLIDEAN_MAIN, build, (1.0, 0.15, -1.0, 0.2, 0.0),
                      (4.0, 0.6, 1.0, 1.5, np.pi), (2.0, 0.3, 0.3, 0.5, 0.0))


def multibump_family() -> FamilySpec:
    """Two counter-rotating swirls against one test bump."""

    def build(p):
        sep, amp, sp, ang = p
        f = rotational_field([-sep, 0.0], 0.5) + rotational_field([sep, 0.0], 0.5, -amp)
        phi = multiply(gaussian_bump([0.0, 0.0], sp), constant_field(_direction(ang)))
        return f, phi

    return FamilySpec("multibump", Setting.EUCLIDEAN_MAIN, build, (0.2, 0.0, 0.3, 0.0),
                      (1.5, 1.5, 1.5, np.pi), (0.5, 0.5, 0.6, 0.8))


def hyperbolic_family() -> FamilySpec:
    """Lifted log-Gaussian swirl against a frame bump in the half-plane."""

    def build(p):
        sf, dx, h, sp, ang = p
        f = lifted_swirl([0.0, 1.0], sf, sf)
        phi = frame_bump_field([dx, h], _direction(ang), sp)
        return f, phi

    return FamilySpec("lifted-hyperbolic", Setting.HYPERBOLIC_MAIN, build, (0.15, -0.6, 0.6, 0.15, 0.0),
                      (0.6, 0.6, 1.6, 0.6, np.pi), (0.3, 0.2, 1.1, 0.3, 1.2))


def low_order_family() -> FamilySpec:
    """Radial (not divergence-free) field plus a swirl, against a test bump."""

    def build(p):
        sf, swirl, dx, sp, ang = p
        f = radial_vector_field([0.0, 0.0], sf) + rotational_field([0.0, 0.0], sf, swirl)
        phi = multiply(gaussian_bump([dx, 0.0], sp), constant_field(_direction(ang)))
        return f, phi

    return FamilySpec("low-order", Setting.EUCLIDEAN_LOW_ORDER, build, (0.3, 0.0, -1.0, 0.3, 0.0),
                      (1.5, 2.0, 1.0, 1.5, np.pi), (0.6, 0.5, 0.4, 0.6, 0.3))


FAMILIES = {
    "rotational": rotational_family,
    "tube": tube_family,
    "multibump": multibump_family,
    "lifted-hyperbolic": hyperbolic_family,
    "low-order": low_order_family,
}

SETTING_FAMILIES = {
    Setting.EUCLIDEAN_MAIN: "tube",
    Setting.HYPERBOLIC_MAIN: "lifted-hyperbolic",
    Setting.EUCLIDEAN_LOW_ORDER: "low-order",
}


def get_family(name: str) -> FamilySpec:
    try:
        return FAMILIES[name]()
    except KeyError:
        raise HarnessError(f"unknown family {name!r}; choose from {sorted(FAMILIES)}") from None


# --------------------------------------------------------------- optimizer


@dataclass(frozen=True)
class TraceRow:
    evaluation: int
    restart: int
    params: tuple
    ratio: float
    best: float


@dataclass
class EstimateResult:
    best: RatioRecord
    trace: list


class ConstantEstimator(BaseEstimator):
    """Lower bound for a best constant by Nelder-Mead with seeded restarts.

    ``fit(family)`` maximizes :func:`ratio` over the family's parameter box.
    Restart 0 starts from the family's nominal point, later restarts from
    uniform draws. The budget caps the total number of ratio evaluations.
    """

    def __init__(self, budget=150, restarts=5, seed=0, k=96, xatol=1e-3):
        self.budget = budget
        self.restarts = restarts
        self.seed = seed
        self.k = k
        self.xatol = xatol

    def fit(self, family: FamilySpec, y=None):
        if not self.budget or self.budget <= 0:
            raise HarnessError("budget must be positive")
        if self.restarts < 1:
            raise HarnessError("need at least one restart")
        rng = np.random.default_rng(self.seed)
        lo, hi = np.asarray(family.lower, float), np.asarray(family.upper, float)
        width = np.where(hi > lo, hi - lo, 1.0)
        trace: list[TraceRow] = []
        records: dict = {}
        best = [-np.inf, None]
        per_restart = max(1, self.budget // self.restarts)

        def evaluate(u, restart):
            p = family.clip(lo + np.clip(u, 0.0, 1.0) * width)
            key = tuple(np.round(p, 12))
            if key not in records:
                if len(trace) >= self.budget:
                    return -best[0] if np.isfinite(best[0]) else 0.0
                try:
                    f, phi = family.build(p)
                    rec = ratio(f, phi, family.setting, self.k, family.name, p)
                    val = rec.ratio
                except (QuadratureError, FieldError, HarnessError) as exc:
                    log.warning("family %s at %s: %s", family.name, p, exc)
                    rec, val = None, 0.0
                records[key] = (rec, val)
                if val > best[0]:
                    best[0], best[1] = val, rec
                trace.append(TraceRow(len(trace), restart, tuple(float(v) for v in p), val, best[0]))
            return -records[key][1]

        for restart in range(self.restarts):
            if len(trace) >= self.budget:
                break
            u0 = (np.asarray(family.start, float) - lo) / width if restart == 0 else rng.uniform(size=family.dim)
            minimize(evaluate, u0, args=(restart,), method="Nelder-Mead",
                     options={"xatol": self.xatol, "fatol": 1e-9, "maxfev": per_restart,
                              "initial_simplex": _simplex(u0)})
        if best[1] is None:
            raise HarnessError(f"no admissible evaluation in family {family.name}")
        self.best_ = best[1]
        self.constant_ = best[1].ratio
        self.trace_ = trace
        return self


def _simplex(u0, step=0.15):
    d = len(u0)
    pts = [u0]
    for i in range(d):
        v = u0.copy()
        v[i] = v[i] + step if v[i] + step <= 1.0 else v[i] - step
        pts.append(v)
    return np.array(pts)


def estimate_constant(family: FamilySpec, budget: int = 150, seed: int = 0, k=96, restarts: int = 5):
    est = ConstantEstimator(budget, restarts, seed, k).fit(family)
    return EstimateResult(est.best_, est.trace_)


# ------------------------------------------------------------------- Hardy


def _vertical_derivative(phi: ScalarField) -> ScalarField:
    def nograd(x):
        raise FieldError("e_n phi carries no gradient here")

    return ScalarField(lambda x: x[:, -1] * phi.grad(x)[:, -1], nograd, phi.dim, None, phi.support,
                       f"e_n({phi.name})")


def hardy_bound(n: int, p: float) -> float:
    return p / (n - 1.0)


def hardy_check(phi: ScalarField, p: float, k: int | None = None, tol: float = 1e-8) -> float:
    """``||phi||_p / ||e_n phi||_p`` on ``H^n``; at most ``p/(n-1)``."""
    n = phi.dim
    if n < 2:
        raise GeometryError("the Hardy constant needs n >= 2")
    if not 1 <= p < np.inf:
        raise HarnessError("need 1 <= p < inf")
    num = lp_norm(phi, p, "hyperbolic", k=k, tol=tol).value
    den = lp_norm(_vertical_derivative(phi), p, "hyperbolic", k=k, tol=tol).value
    if not den > 0:
        raise HarnessError("e_n phi vanishes identically; the ratio is undefined")
    return num / den


def _smoothstep_cutoff(t):
    """1 for t <= 1, 0 for t >= 2, septic transition; returns value and derivative."""
    eta = PlateauMollifier(0.5)
    return eta(t / 2.0), eta.deriv(t / 2.0) / 2.0


def sharpness_ratio(n: int, p: float, alpha: float, k: int = 200) -> float:
    """Hardy ratio of ``x_n^alpha chi(x_n)``, reduced to one-dimensional integrals.

    Horizontal factors cancel. On ``(0, 1]`` the profile is a pure power and
    both integrals are elementary; the cutoff layer ``[1, 2]`` uses
    Gauss-Legendre, split where the derivative vanishes.
    """
    if not alpha > (n - 1.0) / p:
        raise HarnessError("need alpha > (n-1)/p for integrability")
    e = alpha * p - n + 1.0
    # the derivative changes sign once in the layer; split there so |.|^p stays smooth per panel
    slope = lambda t: alpha * _smoothstep_cutoff(t)[0] + t * _smoothstep_cutoff(t)[1]
    root = brentq(slope, 1.0, 1.999, xtol=1e-15)
    t, w = gauss_on_breaks([1.0, root, 2.0], k // 2)
    chi, dchi = _smoothstep_cutoff(t)
    val = t**alpha * chi
    dval = alpha * t**alpha * chi + t ** (alpha + 1) * dchi
    dens = w * t ** (-float(n))
    num = 1.0 / e + float(dens @ np.abs(val) ** p)
    den = alpha**p / e + float(dens @ np.abs(dval) ** p)
    return (num / den) ** (1.0 / p)


def sharpness_family(n: int, p: float, offsets=(0.5, 0.25, 0.125)):
    """Ratios along ``alpha = (n-1)/p + offset``; they approach ``p/(n-1)`` from below."""
    base = (n - 1.0) / p
    return [(base + d, sharpness_ratio(n, p, base + d)) for d in offsets]


def sobolev_vector_bound(n: int, p: float) -> float:
    """Composite bound ``n p/(n-1)``: Hardy on each frame component, summed."""
    return n * p / (n - 1.0)


def sobolev_vector_check(phi: VectorField, p: float, k: int | None = None, tol: float = 1e-8) -> float:
    """``||phi||_p / ||nabla_g phi||_p`` for a compactly supported frame field."""
    if phi.basis != FRAME:
        raise FieldError("expected a frame field")
    if phi.dim < 2:
        raise GeometryError("need n >= 2")
    num = lp_norm(phi, p, "hyperbolic", k=k, tol=tol).value
    den = gradient_lp_norm(phi, p, "hyperbolic", k=k, tol=tol).value
    if not den > 0:
        raise HarnessError("zero covariant derivative")
    return num / den


def _log_grid(lo, hi, res):
    axes = [np.linspace(lo[i], hi[i], res) for i in range(lo.size - 1)]
    axes.append(np.linspace(np.log(lo[-1]), np.log(hi[-1]), res))
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _from_log(params):
    x = params.copy()
    x[:, -1] = np.exp(params[:, -1])
    return x


def morrey_check(phi: ScalarField, p: float, res: int = 128, k: int | None = None) -> float:
    """``sup|phi| / ||nabla_g phi||_{L^p(H^m)}`` with ``p > m``."""
    m = phi.dim
    if not p > m:
        raise HarnessError(f"Morrey needs p > m, got p={p}, m={m}")
    if phi.support is None:
        raise QuadratureError("phi must be compactly supported")
    lo, hi = phi.support
    sup = probe_sup(lambda x: np.abs(phi(x)), _log_grid(lo, hi, res if m < 3 else 48), _from_log)
    den = gradient_lp_norm(phi, p, "hyperbolic", k=k).value
    if not sup > 0 or not den > 0:
        raise HarnessError("phi vanishes identically; the ratio is undefined")
    return sup / den


# ---------------------------------------------------------- localization


@dataclass(frozen=True)
class BallProfile:
    """``zeta(d) = scale * exp(1 - 1/(1 - (d/R)^2))`` on ``[0, R)``."""

    R: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.R) and self.R > 0):
            raise HarnessError("the localization profile needs a finite support radius")

    def __call__(self, d):
        u = np.clip(np.asarray(d, float) / self.R, 0.0, 1.0)
        inside = u < 1
        out = np.zeros_like(u)
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
        return self.scale * out

    def deriv_over_d(self, d):
        """``zeta'(d) / d``, finite at ``d = 0``."""
        u = np.clip(np.asarray(d, float) / self.R, 0.0, 1.0)
        inside = u < 1
        out = np.zeros_like(u)
        q = 1.0 - u[inside] ** 2
        out[inside] = np.exp(1.0 - 1.0 / q) * (-2.0 / self.R**2) / q**2
        return self.scale * out


def localization_normalization(profile: BallProfile, n: int) -> float:
    """``int zeta(d(x, a))^2 dV_g(a)`` in geodesic polar coordinates (independent of ``x``)."""
    d, w = gauss_legendre(0.0, profile.R, 200)
    return sphere_area(n) * float(w @ (profile(d) ** 2 * np.sinh(d) ** (n - 1)))


def localization_normalization_at(profile: BallProfile, x, k: int = 96) -> float:
    """The same integral by brute-force quadrature over ``a`` in the chart."""
    x = np.asarray(x, float)
    n = x.size
    R = profile.R
    half = x[-1] * np.sinh(R)
    lo = np.append(x[:-1] - half, x[-1] * np.exp(-R))
    hi = np.append(x[:-1] + half, x[-1] * np.exp(R))
    rule = box_rule((lo, hi), k, hyperbolic=True)
    return float(rule.integrate(lambda a: profile(hyperbolic_distance(a, x[None, :])) ** 2))


@dataclass(frozen=True)
class LocalizedReport:
    normalization: tuple
    closed_form: float
    scale: float
    xn_range: tuple
    numerator: float
    f_terms: float
    phi_terms: float
    ratio: float


def appendix_localized_estimate(f: VectorField, phi: VectorField, profile: BallProfile | None = None,
                                probes=None, k: int = 96) -> LocalizedReport:
    """Localized pairing at ``a = (0, 1)`` after normalizing the ball profile."""
    if f.basis != FRAME or phi.basis != FRAME:
        raise FieldError("expected frame fields")
    profile = profile or BallProfile(1.0)
    n = f.dim
    closed = localization_normalization(profile, n)
    probes = probes if probes is not None else [np.append(np.zeros(n - 1), 1.0),
                                                 np.append(np.full(n - 1, 0.7), 2.5)]
    scale = 1.0 / np.sqrt(closed)
    zeta = BallProfile(profile.R, profile.scale * scale)
    norms = tuple(localization_normalization_at(zeta, x, k) for x in probes)
    alpha = np.append(np.zeros(n - 1), 1.0)
    R = profile.R
    lo = np.append(np.full(n - 1, -np.sinh(R)), np.exp(-R))
    hi = np.append(np.full(n - 1, np.sinh(R)), np.exp(R))

    def zeta_a(x):
        return zeta(hyperbolic_distance(x, alpha[None, :]))

    def grad_zeta_a(x):
        """Frame components of the metric gradient of ``zeta_a``."""
        d = hyperbolic_distance(x, alpha[None, :])
        dq = x.copy()
        dq[:, :-1] = x[:, :-1] / x[:, -1:]
        sq = np.sum((x - alpha) ** 2, -1)
        dq[:, -1] = (x[:, -1] - 1.0) / x[:, -1] - sq / (2.0 * x[:, -1] ** 2)
        ratio_d = np.where(d > 1e-8, d / np.sinh(np.maximum(d, 1e-300)), 1.0)
        # zeta'(d) dd = (zeta'(d)/d) (d/sinh d) dq and e_i = x_n d_i
        return (zeta.deriv_over_d(d) * ratio_d)[:, None] * dq * x[:, -1:]

    rule = box_rule((lo, hi), k, hyperbolic=True)
    inside = zeta_a(rule.nodes) > 0
    xn = rule.nodes[inside, -1]
    num = abs(float(rule.integrate(lambda x: zeta_a(x) ** 2 * np.sum(f(x) * phi(x), -1))))
    f1 = float(rule.integrate(lambda x: zeta_a(x) * np.linalg.norm(f(x), axis=-1)))
    f2 = float(rule.integrate(lambda x: np.abs(np.sum(grad_zeta_a(x) * f(x), -1))))
    ph = (gradient_lp_norm(phi, float(n), "hyperbolic").value + lp_norm(phi, float(n), "hyperbolic").value)
    den = (f1 + f2) * ph
    if not den > 0:
        raise HarnessError("localized denominator vanishes")
    return LocalizedReport(norms, closed, scale, (float(xn.min()), float(xn.max())), num, f1 + f2, ph, num / den)


# -------------------------------------------------------- flux proposition


@dataclass(frozen=True)
class FluxReport:
    flux: float
    f_volume: float
    f_surface: float
    w1n: float
    lam: float
    part_one: float
    part_two: float
    bound_one: float
    bound_two: float
    ratio: float

    @property
    def dominated(self) -> bool:
        return abs(self.flux) <= (self.bound_one + self.bound_two) * (1 + 1e-9) + 1e-14


def _extension_sup_ambient(ext: ScalarField, res: int = 96) -> float:
    lo, hi = ext.support
    lo = lo.copy()
    lo[-1] = hi[-1] * 1e-3
    return probe_sup(lambda x: x[:, -1] * np.linalg.norm(ext.grad(x), axis=-1), _log_grid(lo, hi, res),
                     _from_log)


def proposition_flux_bound(f: VectorField, phi: VectorField, s, k: int = 96) -> FluxReport:
    """Flux through ``s`` against ``||f||_1(outside)^{1/n} ||f||_1(s)^{1-1/n} ||phi||_{W^{1,n}(s)}``.

    ``s`` is the unit sphere (Euclidean) or the vertical plane
    ``{x_1 = 0}`` (hyperbolic). The decomposition of ``<phi, nu>`` at the
    balancing scale ``lam = ||f||_1(outside) / ||f||_1(s)`` gives the two
    bounds whose sum must dominate the flux.
    """
    n = f.dim
    if isinstance(s, Sphere):
        if not (np.allclose(s.center, 0) and s.radius == 1.0):
            raise GeometryError("the Euclidean proposition uses the unit sphere")
        space = "euclidean"
        f_vol = l1_norm(f, space, domain="exterior").value
        psi = sphere_normal_component(phi)
    elif isinstance(s, VerticalPlane):
        if s.axis != 0 or s.offset != 0:
            raise GeometryError("the hyperbolic proposition uses the plane x_1 = 0")
        space = "hyperbolic"
        f_vol = l1_norm(f, space, domain="halfspace_x1_positive").value
        psi = plane_normal_component(phi, 0)
    else:
        raise GeometryError("expected the unit sphere or the plane x_1 = 0")
    flux = boundary_flux(f, phi, s, k)
    f_surf = surface_l1_norm(f, s, k)
    w1n = w1n_surface_norm(phi, s, k).value
    if not (f_vol > 0 and f_surf > 0 and w1n > 0):
        raise HarnessError(f"degenerate denominator: |f|_1 outside={f_vol:.3g}, on s={f_surf:.3g}, "
                           f"W1n={w1n:.3g}")
    lam = f_vol / f_surf
    if space == "euclidean":
        res = sphere_decompose(psi, lam)
        rule = sphere_rule(n, 2 * k)
        nu_f = lambda x: np.sum(f(x) * x, -1)
        part_one = float(rule.integrate(lambda x: nu_f(x) * res.phi1(x)))
        part_two = float(rule.integrate(lambda x: nu_f(x) * res.phi2(x)))
        sup_ext = res.sup_grad_extension
    else:
        res = hyperbolic_decompose(psi, lam, float(n))
        ext = extend_to_ambient(res.phi2)
        rule = surface_rule(s, box=f.support, k=k)
        keep = list(range(1, n))
        part_one = float(rule.integrate(lambda x: f(x)[:, 0] * res.phi1(x[:, keep])))
        part_two = float(rule.integrate(lambda x: f(x)[:, 0] * res.phi2(x[:, keep])))
        sup_ext = res.sup_grad_phi2 if lam >= 1 else max(res.sup_grad_phi2, _extension_sup_ambient(ext))
    bound_one = f_surf * res.sup_phi1
    bound_two = f_vol * sup_ext
    ratio_ = abs(flux) / (f_vol ** (1.0 / n) * f_surf ** (1.0 - 1.0 / n) * w1n)
    return FluxReport(flux, f_vol, f_surf, w1n, lam, part_one, part_two, bound_one, bound_two, ratio_)
