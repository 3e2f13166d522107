"""Numeric transforms on daily series and the Pearson kernel."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .exceptions import InputError

# Sample standard deviations at or below this fraction of the series
# magnitude are rounding noise, not variation.
_ZERO_SPREAD_RTOL = 1e-12


@dataclass(frozen=True)
class SmoothingConfig:
    window: int = 10

    def __post_init__(self):
        if int(self.window) != self.window or self.window < 1:
            raise InputError(f"smoothing window must be a positive integer, got {self.window}")


@dataclass(frozen=True)
class LagSpec:
    """Day offset of the peer series; negative means it starts earlier."""

    lag: int

    def check(self, length: int) -> None:
        if abs(self.lag) >= length:
            raise InputError(f"|lag| = {abs(self.lag)} must be below the series length {length}")


def _as_vector(x, name="x"):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InputError(f"{name} must be one-dimensional")
    return x


def sma_smooth(values, cfg: SmoothingConfig | int = 10) -> np.ndarray:
    """Trailing simple moving average, same length as the input.

    Day ``d`` gets the unweighted mean of the last ``window`` values ending
    at ``d``. The first ``window - 1`` days, which lack a full history, get
    the mean of whatever prefix exists.
    """
    window = cfg.window if isinstance(cfg, SmoothingConfig) else SmoothingConfig(cfg).window
    x = _as_vector(values, "values")
    out = np.empty_like(x)
    for d in range(x.size):
        out[d] = x[max(0, d - window + 1): d + 1].mean()
    return out


def apply_lag(x, y, spec: LagSpec | int):
    """Align ``x`` with ``y`` shifted by ``lag`` days.

    For ``lag > 0`` the pair is ``(x[:T-lag], y[lag:])``; for ``lag < 0`` it
    is ``(x[-lag:], y[:T+lag])``.
    """
    lag = spec.lag if isinstance(spec, LagSpec) else int(spec)
    x, y = _as_vector(x, "x"), _as_vector(y, "y")
    if x.size != y.size:
        raise InputError(f"series lengths differ: {x.size} vs {y.size}")
    LagSpec(lag).check(x.size)
    t = x.size
    if lag > 0:
        return x[: t - lag], y[lag:]
    if lag < 0:
        return x[-lag:], y[: t + lag]
    return x, y


def _has_spread(x: np.ndarray, s: float) -> bool:
    scale = float(np.max(np.abs(x)))
    return s > _ZERO_SPREAD_RTOL * scale


def pearson(x, y) -> float | None:
    """Sample Pearson correlation, or ``None`` when it is undefined.

    Evaluated as the mean product of standardized deviations with the
    ``1 / (T - 1)`` normalization. ``None`` is returned when either series
    has zero sample standard deviation.
    """
    x, y = _as_vector(x, "x"), _as_vector(y, "y")
    if x.size != y.size:
        raise InputError(f"series lengths differ: {x.size} vs {y.size}")
    t = x.size
    if t < 2:
        raise InputError("pearson needs at least 2 observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float(dx @ dx) / (t - 1))
    sy = math.sqrt(float(dy @ dy) / (t - 1))
    if not (_has_spread(x, sx) and _has_spread(y, sy)):
        return None
    return float(np.sum((dx / sx) * (dy / sy))) / (t - 1)


def log_returns(close) -> np.ndarray:
    p = _as_vector(close, "close")
    if p.size < 2:
        raise InputError("log returns need at least 2 prices")
    if not np.all(p > 0):
        raise InputError("log returns need strictly positive prices")
    return np.log(p[1:] / p[:-1])


def rolling_volatility(returns, window: int = 21) -> np.ndarray:
    """Sample standard deviation of each trailing ``window`` of returns.

    The output has ``len(returns) - window + 1`` entries; entry ``j`` covers
    ``returns[j : j + window]``.
    """
    r = _as_vector(returns, "returns")
    if window < 2:
        raise InputError("volatility window must be at least 2")
    if r.size < window:
        raise InputError(f"need at least {window} returns, got {r.size}")
    return sliding_window_view(r, window).std(axis=1, ddof=1)
