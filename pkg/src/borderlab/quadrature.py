"""Tensor-product quadrature on spheres, hyperbolic surfaces and volumes.

Everything is built from Gauss-Legendre panels and the periodic trapezoid
rule. Hyperbolic rules run the vertical coordinate through ``log x_n`` and
fold the hyperbolic density into the weights, so ``rule.integrate(F)``
returns the integral against ``dV_g`` (or the induced ``dV'_g``).

Integrands on improper domains must come with a support box ``(lo, hi)``;
a rule refuses to integrate over a box reaching ``x_n <= 0`` or beyond a
declared truncation radius.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import Hemisphere, Sphere, VerticalPlane

MAX_PANEL_ORDER = 96
CHUNK = 1 << 16


class QuadratureError(ValueError):
    """Raised when a rule cannot honour its accuracy or support contract."""


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    domain: str
    order: int
    measure: str = "lebesgue"

    def __post_init__(self):
        if len(self.nodes) != len(self.weights):
            raise QuadratureError("node and weight counts differ")

    def __len__(self):
        return len(self.weights)

    def integrate(self, func) -> np.ndarray:
        """``sum_i w_i func(x_i)``; ``func`` maps an ``(N, n)`` node block to ``(N, ...)``."""
        total = None
        for start in range(0, len(self.weights), CHUNK):
            x = self.nodes[start:start + CHUNK]
            w = self.weights[start:start + CHUNK]
            vals = np.asarray(func(x), dtype=float)
            part = np.tensordot(w, vals, axes=(0, 0))
            total = part if total is None else total + part
        if total is None:
            return np.float64(0.0)
        return total


@lru_cache(maxsize=256)
def _leggauss(k: int):
    x, w = np.polynomial.legendre.leggauss(k)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(a: float, b: float, k: int, panels: int | None = None):
    """Composite Gauss-Legendre nodes and weights on ``[a, b]``."""
    if k < 1:
        raise QuadratureError("need at least one node")
    if panels is None:
        panels = max(1, -(-k // MAX_PANEL_ORDER))
        k = -(-k // panels)
    edges = np.linspace(a, b, panels + 1)
    return gauss_on_breaks(edges, k)


def gauss_on_breaks(breaks, k: int):
    """Gauss-Legendre with ``k`` nodes on every interval between consecutive breaks."""
    x0, w0 = _leggauss(k)
    breaks = np.asarray(breaks, dtype=float)
    lo, hi = breaks[:-1], breaks[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
    w = (half[:, None] * w0[None, :]).ravel()
    return x, w


def trapezoid_periodic(m: int, a: float = 0.0, b: float = 2 * np.pi):
    t = a + (b - a) * np.arange(m) / m
    return t, np.full(m, (b - a) / m)


def _tensor(axes):
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return nodes, weights


def as_box(box, n: int | None = None):
    if box is None:
        raise QuadratureError("an integrand support box is required on this domain")
    lo, hi = (np.asarray(b, dtype=float).reshape(-1) for b in box)
    if lo.shape != hi.shape or (n is not None and lo.size != n):
        raise QuadratureError("malformed support box")
    if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)) or np.any(hi < lo):
        raise QuadratureError("support box must be finite with lo <= hi")
    return lo, hi


def intersect_boxes(a, b):
    if a is None:
        return b
    if b is None:
        return a
    lo = np.maximum(a[0], b[0])
    hi = np.minimum(a[1], b[1])
    return lo, np.maximum(hi, lo)


def union_boxes(a, b):
    if a is None or b is None:
        return None
    return np.minimum(a[0], b[0]), np.maximum(a[1], b[1])


# ------------------------------------------------------------------ spheres


def sphere_rule(n: int, order: int = 32, center=None, radius: float = 1.0) -> QuadratureRule:
    """Rule on the round sphere of dimension ``n - 1`` exact to polynomial degree ``order``.

    Circle: trapezoid with ``order + 1`` nodes. Two-sphere: Gauss-Legendre in
    ``cos(theta)`` times trapezoid in azimuth.
    """
    if n == 2:
        t, w = trapezoid_periodic(order + 1)
        nodes = np.stack([np.cos(t), np.sin(t)], axis=-1)
    elif n == 3:
        ct, wt = gauss_legendre(-1.0, 1.0, order // 2 + 1)
        az, wa = trapezoid_periodic(order + 1)
        grid, w = _tensor([(ct, wt), (az, wa)])
        c, a = grid[:, 0], grid[:, 1]
        s = np.sqrt(np.clip(1 - c * c, 0.0, None))
        nodes = np.stack([s * np.cos(a), s * np.sin(a), c], axis=-1)
    else:
        raise QuadratureError(f"sphere rules exist for n in (2, 3), got {n}")
    center = np.zeros(n) if center is None else np.asarray(center, float)
    return QuadratureRule(center + radius * nodes, w * radius ** (n - 1), f"sphere{n - 1}", order)


# ---------------------------------------------------------- hyperbolic axes


def _vertical_axis(a: float, b: float, k: int):
    """Nodes in ``x_n`` on ``[a, b]`` laid out uniformly in ``log x_n``."""
    if not a > 0:
        raise QuadratureError(f"vertical extent must stay above x_n = 0, got lower end {a}")
    t, w = gauss_legendre(np.log(a), np.log(b), k)
    xn = np.exp(t)
    return xn, w * xn


def _box_axes(lo, hi, k: int, hyperbolic: bool):
    axes = []
    n = lo.size
    for i in range(n):
        if hyperbolic and i == n - 1:
            axes.append(_vertical_axis(lo[i], hi[i], k))
        elif hi[i] > lo[i]:
            axes.append(gauss_legendre(lo[i], hi[i], k))
        else:
            axes.append((np.array([lo[i]]), np.array([0.0])))
    return axes


def box_rule(box, k: int = 64, hyperbolic: bool = False) -> QuadratureRule:
    """Tensor rule on a box; hyperbolic rules carry the ``x_n**-n`` density."""
    lo, hi = as_box(box)
    nodes, w = _tensor(_box_axes(lo, hi, k, hyperbolic))
    if hyperbolic:
        w = w * nodes[:, -1] ** (-float(lo.size))
        return QuadratureRule(nodes, w, "hyperbolic-box", k, "hyperbolic")
    return QuadratureRule(nodes, w, "box", k)


def uniform_box_rule(box, k: int = 64) -> QuadratureRule:
    """Trapezoid rule with ``k`` equispaced nodes per axis, endpoints included.

    Spectrally accurate for smooth integrands that vanish to all orders at
    the box faces, which is the situation for the catalog's bumps.
    """
    lo, hi = as_box(box)
    axes = []
    for a, b in zip(lo, hi):
        x = np.linspace(a, b, k)
        w = np.full(k, (b - a) / (k - 1))
        w[[0, -1]] *= 0.5
        axes.append((x, w))
    nodes, w = _tensor(axes)
    return QuadratureRule(nodes, w, "uniform-box", k)


def _angle_window(center2, lo2, hi2):
    """Azimuth interval about ``center2`` covering the planar box, or ``None`` for all."""
    if np.all(center2 >= lo2) and np.all(center2 <= hi2):
        return None
    corners = np.array([[lo2[0], lo2[1]], [lo2[0], hi2[1]], [hi2[0], lo2[1]], [hi2[0], hi2[1]]])
    mid = 0.5 * (lo2 + hi2) - center2
    ref = np.arctan2(mid[1], mid[0])
    ang = np.arctan2(corners[:, 1] - center2[1], corners[:, 0] - center2[0]) - ref
    ang = (ang + np.pi) % (2 * np.pi) - np.pi
    return ref + ang.min(), ref + ang.max()


def volume_rule(domain: str, box=None, k: int = 64, r_max: float | None = None,
                angular: int | None = None) -> QuadratureRule:
    """Volume rules.

    ``domain`` is one of ``"box"`` (Euclidean box), ``"ball"`` (unit ball),
    ``"exterior"`` (``|x| > 1``, truncated at ``r_max`` or by the box),
    ``"hyperbolic"`` (chart box, ``dV_g``) and ``"halfspace_x1_positive"``
    (chart box clipped to ``x_1 >= 0``, ``dV_g``).
    """
    if domain == "box":
        return box_rule(box, k)
    if domain == "hyperbolic":
        return box_rule(box, k, hyperbolic=True)
    if domain == "halfspace_x1_positive":
        lo, hi = as_box(box)
        lo = lo.copy()
        lo[0] = max(lo[0], 0.0)
        hi = np.maximum(hi, lo)
        rule = box_rule((lo, hi), k, hyperbolic=True)
        return QuadratureRule(rule.nodes, rule.weights, domain, k, "hyperbolic")
    if domain in ("ball", "exterior"):
        return _radial_rule(domain, box, k, r_max, angular)
    raise QuadratureError(f"unknown domain {domain!r}")


def _radial_rule(domain, box, k, r_max, angular):
    if box is not None:
        lo, hi = as_box(box)
        n = lo.size
        far = np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi)))
        near = np.linalg.norm(np.maximum(0.0, np.maximum(lo, -hi)))
    else:
        lo = hi = None
        n = None
        far, near = np.inf, 0.0
    if domain == "ball":
        r0, r1 = 0.0, 1.0
    else:
        if r_max is not None and far > r_max * (1 + 1e-12):
            raise QuadratureError(f"integrand support reaches |x| = {far:.6g} beyond truncation {r_max}")
        if not np.isfinite(far) and r_max is None:
            raise QuadratureError("exterior domain needs a support box or a truncation radius")
        r0, r1 = max(1.0, near), min(far, r_max if r_max is not None else far)
    if n is None:
        raise QuadratureError("radial rules need the dimension via a support box")
    if r1 <= r0:
        return QuadratureRule(np.zeros((0, n)), np.zeros(0), domain, k)
    r, wr = gauss_legendre(r0, r1, k)
    angular = angular or 2 * k
    if n == 2:
        win = _angle_window(np.zeros(2), lo, hi) if lo is not None else None
        if win is None:
            t, wt = trapezoid_periodic(angular)
        else:
            t, wt = gauss_legendre(win[0], win[1], angular)
        grid, w = _tensor([(r, wr), (t, wt)])
        nodes = grid[:, :1] * np.stack([np.cos(grid[:, 1]), np.sin(grid[:, 1])], axis=-1)
        w = w * grid[:, 0]
    elif n == 3:
        sph = sphere_rule(3, angular)
        w = (wr[:, None] * r[:, None] ** 2 * sph.weights[None, :]).ravel()
        nodes = (r[:, None, None] * sph.nodes[None, :, :]).reshape(-1, 3)
    else:
        raise QuadratureError("radial rules exist for n in (2, 3)")
    return QuadratureRule(nodes, w, domain, k)


# ----------------------------------------------------------------- surfaces


def surface_rule(s, box=None, eps: float | None = None, k: int = 64,
                 angular: int | None = None) -> QuadratureRule:
    """Rule on a hypersurface whose weights include the induced measure.

    Hyperbolic surfaces need either the integrand's support box (the rule is
    then restricted to the part of ``s`` meeting it) or a band cutoff
    ``x_n >= eps``.
    """
    if isinstance(s, Sphere):
        return sphere_rule(s.dim, angular or k, s.center, s.radius)
    if eps is not None and not eps > 0:
        raise QuadratureError(f"truncation eps must be positive, got {eps}")
    if box is None and eps is None:
        raise QuadratureError("hyperbolic surfaces need a support box or a truncation eps")
    if isinstance(s, VerticalPlane):
        return _plane_rule(s, box, eps, k)
    if isinstance(s, Hemisphere):
        return _hemisphere_rule(s, box, eps, k, angular)
    raise QuadratureError(f"no surface rule for {s!r}")


def _plane_rule(s: VerticalPlane, box, eps, k):
    if box is None:
        raise QuadratureError("vertical planes have unbounded extent; pass a support box")
    lo, hi = as_box(box)
    lo, hi = lo.copy(), hi.copy()
    n = lo.size
    if not lo[s.axis] <= s.offset <= hi[s.axis]:
        return QuadratureRule(np.zeros((0, n)), np.zeros(0), "plane", k, "hyperbolic")
    if eps is not None:
        lo[-1] = max(lo[-1], eps)
    if not lo[-1] > 0:
        raise QuadratureError("support box reaches x_n <= 0")
    axes = []
    for i in range(n):
        if i == s.axis:
            axes.append((np.array([s.offset]), np.array([1.0])))
        elif i == n - 1:
            axes.append(_vertical_axis(lo[i], hi[i], k))
        else:
            axes.append(gauss_legendre(lo[i], hi[i], k))
    nodes, w = _tensor(axes)
    w = w * nodes[:, -1] ** (-(n - 1.0))
    return QuadratureRule(nodes, w, "plane", k, "hyperbolic")


def _arc_intervals(z, r, lo, hi, eps):
    """Polar-angle intervals (from the apex) of a semicircle inside a 2-D box."""
    a = lo[1] if eps is None else max(lo[1], eps)
    b = hi[1]
    if a >= r or b <= 0 or a > b:
        return []
    big = np.arccos(np.clip(a / r, -1, 1))
    small = np.arccos(np.clip(b / r, -1, 1))
    s_lo = np.arcsin(np.clip((lo[0] - z) / r, -1, 1))
    s_hi = np.arcsin(np.clip((hi[0] - z) / r, -1, 1))
    out = []
    for p, q in ((-big, -small), (small, big)):
        u, v = max(p, s_lo), min(q, s_hi)
        if v > u:
            out.append((u, v))
    if len(out) == 2 and abs(out[0][1] - out[1][0]) < 1e-15:
        out = [(out[0][0], out[1][1])]
    return out


def _hemisphere_rule(s: Hemisphere, box, eps, k, angular):
    n = s.dim
    r = s.radius
    if box is None:
        lo = np.full(n, -np.inf)
        hi = np.full(n, np.inf)
        lo[:-1] = s.center - r
        hi[:-1] = s.center + r
        lo[-1], hi[-1] = eps, r
    else:
        lo, hi = as_box(box)
        if not lo[-1] > 0 and eps is None:
            raise QuadratureError("support box reaches x_n <= 0")
    if n == 2:
        parts = _arc_intervals(s.center[0], r, lo, hi, eps)
        if not parts:
            return QuadratureRule(np.zeros((0, 2)), np.zeros(0), "hemisphere", k, "hyperbolic")
        pieces = [gauss_legendre(u, v, k) for u, v in parts]
        t = np.concatenate([p[0] for p in pieces])
        wt = np.concatenate([p[1] for p in pieces])
        xn = r * np.cos(t)
        nodes = np.stack([s.center[0] + r * np.sin(t), xn], axis=-1)
        # d sigma = r dt, induced density 1 / (x_n r)
        w = wt * r / (xn * r)
        return QuadratureRule(nodes, w, "hemisphere", k, "hyperbolic")
    if n == 3:
        a = lo[-1] if eps is None else max(lo[-1], eps)
        b = min(hi[-1], r)
        if a >= r or a > b:
            return QuadratureRule(np.zeros((0, 3)), np.zeros(0), "hemisphere", k, "hyperbolic")
        th0 = np.arccos(np.clip(b / r, -1, 1))
        th1 = np.arccos(np.clip(a / r, -1, 1))
        th, wth = gauss_legendre(th0, th1, k)
        win = _angle_window(s.center, lo[:2], hi[:2]) if np.all(np.isfinite(lo[:2])) else None
        angular = angular or 2 * k
        if win is None:
            al, wal = trapezoid_periodic(angular)
        else:
            al, wal = gauss_legendre(win[0], win[1], angular)
        grid, w = _tensor([(th, wth), (al, wal)])
        st, ct = np.sin(grid[:, 0]), np.cos(grid[:, 0])
        nodes = np.stack([s.center[0] + r * st * np.cos(grid[:, 1]),
                          s.center[1] + r * st * np.sin(grid[:, 1]),
                          r * ct], axis=-1)
        xn = nodes[:, 2]
        w = w * r * r * st / (xn * xn * r)
        return QuadratureRule(nodes, w, "hemisphere", k, "hyperbolic")
    raise QuadratureError("hemisphere rules exist for n in (2, 3)")
