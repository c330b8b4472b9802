"""Input checks shared by the estimators."""

from __future__ import annotations

import numpy as np

from .geometry import GeometryError


def check_points(X, dim: int, hyperbolic: bool = False) -> np.ndarray:
    """Return ``X`` as a float array of shape ``(N, dim)``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :] if X.size == dim else X[:, None]
    if X.ndim != 2 or X.shape[1] != dim:
        raise GeometryError(f"expected points of dimension {dim}, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise GeometryError("non-finite coordinates")
    if hyperbolic and np.any(X[:, -1] <= 0):
        raise GeometryError("x_n must be positive in the half-space chart")
    return X
