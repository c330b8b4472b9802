"""Upper half-space model of hyperbolic space, plus flat Euclidean space.

Points are plain coordinate arrays; the last coordinate is the vertical one
(``x_n``) and must be positive in the hyperbolic chart. Frame components
always refer to the orthonormal frame ``e_i = x_n d/dx_i``. Frame indices
are 0-based, so ``n - 1`` is the vertical direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

SURFACE_RTOL = 1e-9


class GeometryError(ValueError):
    """Raised for points outside the chart or off a surface."""


class Space(str, Enum):
    EUCLIDEAN = "euclidean"
    HYPERBOLIC = "hyperbolic"


@dataclass(frozen=True)
class Point:
    coords: np.ndarray
    space: Space = Space.HYPERBOLIC

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float).reshape(-1)
        if c.size < 1:
            raise GeometryError("a point needs at least one coordinate")
        if not np.all(np.isfinite(c)):
            raise GeometryError("non-finite coordinates")
        space = Space(self.space)
        if space is Space.HYPERBOLIC and c[-1] <= 0:
            raise GeometryError(f"x_n must be positive in the half-space chart, got {c[-1]}")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "space", space)

    @property
    def dim(self) -> int:
        return self.coords.size


def _coords(x) -> np.ndarray:
    if isinstance(x, Point):
        return x.coords
    return np.asarray(x, dtype=float)


def _space(x, space) -> Space:
    if space is not None:
        return Space(space)
    if isinstance(x, Point):
        return x.space
    return Space.HYPERBOLIC


def _check_chart(c: np.ndarray):
    if np.any(c[..., -1] <= 0):
        raise GeometryError("x_n must be positive in the half-space chart")


def metric_inner(x, u, v, space=None) -> np.ndarray:
    """Inner product of coordinate vectors ``u``, ``v`` at ``x``.

    Broadcasts over leading axes. In the hyperbolic chart this is
    ``<u, v>_e / x_n**2``.
    """
    c = _coords(x)
    dot = np.sum(np.asarray(u, float) * np.asarray(v, float), axis=-1)
    if _space(x, space) is Space.EUCLIDEAN:
        return dot
    _check_chart(c)
    return dot / c[..., -1] ** 2


def frame_to_coordinate(x, comps) -> np.ndarray:
    """Coordinate components of a vector given in the frame at ``x``."""
    c = _coords(x)
    _check_chart(c)
    return np.asarray(comps, float) * c[..., -1:]


def coordinate_to_frame(x, vec) -> np.ndarray:
    c = _coords(x)
    _check_chart(c)
    return np.asarray(vec, float) / c[..., -1:]


def frame_connection(i: int, j: int, n: int) -> np.ndarray:
    """Frame coefficients of ``nabla_{e_i} e_j``.

    The coefficients do not depend on the base point:
    ``nabla_{e_i} e_j = delta_ij e_n`` and ``nabla_{e_i} e_n = -e_i`` for
    horizontal ``i, j``; everything differentiated along ``e_n`` vanishes.
    """
    if n < 1:
        raise GeometryError("dimension must be >= 1")
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"frame indices must lie in [0, {n}), got ({i}, {j})")
    out = np.zeros(n)
    top = n - 1
    if i == top:
        return out
    if j == top:
        out[i] = -1.0
    elif i == j:
        out[top] = 1.0
    return out


def connection_table(n: int) -> np.ndarray:
    """Array ``G[i, j, k]`` = coefficient of ``e_k`` in ``nabla_{e_i} e_j``."""
    return np.array([[frame_connection(i, j, n) for j in range(n)] for i in range(n)])


def frame_bracket(i: int, j: int, n: int) -> np.ndarray:
    """Frame coefficients of the Lie bracket ``[e_i, e_j]``."""
    out = np.zeros(n)
    top = n - 1
    if i == top and j != top:
        out[j] = 1.0
    elif j == top and i != top:
        out[i] = -1.0
    return out


def hyperbolic_distance(x, y) -> np.ndarray:
    """Half-space distance ``arccosh(1 + |x - y|^2 / (2 x_n y_n))``."""
    if isinstance(x, Point) and isinstance(y, Point) and x.space != y.space:
        raise GeometryError("points live in different spaces")
    if (isinstance(x, Point) and x.space is Space.EUCLIDEAN) or (
        isinstance(y, Point) and y.space is Space.EUCLIDEAN
    ):
        raise GeometryError("hyperbolic distance needs half-space points")
    a, b = _coords(x), _coords(y)
    _check_chart(a)
    _check_chart(b)
    sq = np.sum((a - b) ** 2, axis=-1)
    q = sq / (2.0 * a[..., -1] * b[..., -1])
    # arccosh(1 + q) without cancellation for small q
    return np.log1p(q + np.sqrt(q * (q + 2.0)))


def volume_weight(x, space=None) -> np.ndarray:
    """Density of ``dV_g`` against Lebesgue measure, ``x_n**-n``."""
    c = _coords(x)
    if _space(x, space) is Space.EUCLIDEAN:
        return np.ones(c.shape[:-1]) if c.ndim > 1 else 1.0
    _check_chart(c)
    n = c.shape[-1]
    return c[..., -1] ** (-float(n))


# ---------------------------------------------------------------- surfaces


@dataclass(frozen=True)
class VerticalPlane:
    """The totally geodesic plane ``{x_axis = offset}`` (axis is horizontal)."""

    axis: int = 0
    offset: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.offset):
            raise GeometryError("plane offset must be finite")


@dataclass(frozen=True)
class Hemisphere:
    """Euclidean northern hemisphere ``|x - (center, 0)| = radius``."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        z = np.asarray(self.center, dtype=float).reshape(-1)
        if not self.radius > 0:
            raise GeometryError(f"hemisphere radius must be positive, got {self.radius}")
        z.setflags(write=False)
        object.__setattr__(self, "center", z)

    @property
    def dim(self) -> int:
        return self.center.size + 1

    def base(self) -> np.ndarray:
        return np.append(self.center, 0.0)


@dataclass(frozen=True)
class Sphere:
    """Euclidean round sphere, used for the flat averaging argument."""

    center: np.ndarray = field(default_factory=lambda: np.zeros(2))
    radius: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        if not self.radius > 0:
            raise GeometryError("sphere radius must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "center", c)

    @property
    def dim(self) -> int:
        return self.center.size


Hypersurface = VerticalPlane | Hemisphere | Sphere


def _surface_residual(c: np.ndarray, s) -> np.ndarray:
    if isinstance(s, VerticalPlane):
        return np.abs(c[..., s.axis] - s.offset) / max(1.0, abs(s.offset))
    if isinstance(s, Hemisphere):
        d = np.linalg.norm(c - s.base(), axis=-1)
        return np.abs(d - s.radius) / s.radius
    d = np.linalg.norm(c - s.center, axis=-1)
    return np.abs(d - s.radius) / s.radius


def on_surface(x, s, rtol: float = SURFACE_RTOL) -> np.ndarray:
    c = _coords(x)
    ok = _surface_residual(c, s) <= rtol
    if isinstance(s, (Hemisphere, VerticalPlane)):
        ok &= c[..., -1] > 0
    return ok


def _require_on(c, s):
    if not np.all(on_surface(c, s)):
        raise GeometryError(f"point(s) not on {s!r}")


def surface_measure_weight(x, s) -> np.ndarray:
    """Factor turning Euclidean ``d sigma`` on ``s`` into the induced measure.

    Hemisphere: ``1 / (x_n**(n-1) r)``; vertical plane: ``x_n**-(n-1)``;
    Euclidean sphere: 1.
    """
    c = _coords(x)
    _require_on(c, s)
    if isinstance(s, Sphere):
        return np.ones(c.shape[:-1]) if c.ndim > 1 else 1.0
    n = c.shape[-1]
    w = c[..., -1] ** (-(n - 1.0))
    if isinstance(s, Hemisphere):
        w = w / s.radius
    return w


def unit_normal(x, s) -> np.ndarray:
    """Unit normal to ``s`` at ``x``.

    Frame components for the hyperbolic surfaces (upward for hemispheres,
    ``+e_axis`` for vertical planes), Euclidean components (outward) for
    a round sphere.
    """
    c = _coords(x)
    _require_on(c, s)
    n = c.shape[-1]
    if isinstance(s, VerticalPlane):
        out = np.zeros(c.shape)
        out[..., s.axis] = 1.0
        return out
    base = s.base() if isinstance(s, Hemisphere) else s.center
    d = c - base
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


# -------------------------------------------------------------- isometries


@dataclass(frozen=True)
class HalfSpaceIsometry:
    """``x -> scale * x + (shift, 0)``: horizontal translation composed with dilation."""

    shift: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        a = np.asarray(self.shift, dtype=float).reshape(-1)
        if not self.scale > 0:
            raise GeometryError("dilation factor must be positive")
        a.setflags(write=False)
        object.__setattr__(self, "shift", a)

    def apply(self, x) -> np.ndarray:
        c = _coords(x)
        return self.scale * c + np.append(self.shift, 0.0)

    def inverse_apply(self, y) -> np.ndarray:
        c = _coords(y)
        return (c - np.append(self.shift, 0.0)) / self.scale

    def map_surface(self, s):
        if isinstance(s, VerticalPlane):
            return VerticalPlane(s.axis, self.scale * s.offset + self.shift[s.axis])
        if isinstance(s, Hemisphere):
            return Hemisphere(self.scale * s.center + self.shift, self.scale * s.radius)
        raise GeometryError("only half-space surfaces are mapped by half-space isometries")

    def map_box(self, box):
        lo, hi = box
        return self.apply(lo), self.apply(hi)
