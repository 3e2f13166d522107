"""Input validation shared by the estimators."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .exceptions import InputError


def check_views(X, *, copy=False) -> np.ndarray:
    """Coerce a set of square view matrices into an ``(m, n, n)`` float array.

    Accepts a :class:`~multicg.factors.GraphSet`, a sequence of
    :class:`~multicg.factors.CorrelationMatrix` or arrays, a single
    ``(n, n)`` array, or an ``(m, n, n)`` array.
    """
    if hasattr(X, "stack"):
        X = X.stack()
    elif isinstance(X, (list, tuple)):
        X = [getattr(v, "values", v) for v in X]
        if not X:
            raise InputError("at least one view is required")
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[np.newaxis]
    if X.ndim != 3 or X.shape[1] != X.shape[2]:
        raise InputError(f"views must have shape (m, n, n), got {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise InputError("empty views")
    try:
        X = check_array(X, allow_nd=True, dtype=np.float64, copy=copy)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return X


def check_square(A, name="matrix") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"{name} must be square, got shape {A.shape}")
    return A
