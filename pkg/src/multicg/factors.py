"""Correlation matrices over entities: Twitter-side factors and market truth.

Twitter-side factors (one matrix each):

========  =====================================================
``t``     Pearson of smoothed daily tweet counts
``r``     Pearson of smoothed daily retweet counts
``t(l)``  as ``t`` with the peer series shifted by ``l`` days
``r(l)``  as ``r`` with the peer series shifted by ``l`` days
``ct``    Jaccard overlap of the tweet id sets
``cr``    Jaccard overlap of the retweet id sets
========  =====================================================

Market truth matrices are ``tv`` (trading volume), ``cp`` (log returns of
the closing price) and ``hv`` (21-day rolling volatility of log returns).
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import os
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from .corpus import (DailySeries, EntityCatalog, MarketSeries, MentionRecord,
                     MentionSetTable, TimeWindow, build_daily_series,
                     build_mention_sets)
from .exceptions import InputError
from .series import (LagSpec, SmoothingConfig, apply_lag, log_returns, pearson,
                     rolling_volatility, sma_smooth)

DEFAULT_LAGS = (-2, -1, 1, 2)
TRUTH_IDS = ("tv", "cp", "hv")

_SYM_TOL = 1e-12


def lagged_id(kind: str, lag: int) -> str:
    return f"{kind}({lag:+d})"


def factor_ids(lags: Sequence[int] = DEFAULT_LAGS) -> list[str]:
    """Factor ids in their canonical output order."""
    lags = _normalize_lags(lags)
    return (["t", "r"] + [lagged_id("t", l) for l in lags]
            + [lagged_id("r", l) for l in lags] + ["ct", "cr"])


def file_stem(factor: str) -> str:
    """Filesystem-safe name for a factor id, e.g. ``t(-2)`` -> ``t_m2``."""
    if "(" in factor:
        kind, lag = factor.rstrip(")").split("(")
        lag = int(lag)
        return f"{kind}_{'m' if lag < 0 else 'p'}{abs(lag)}"
    return factor


def factor_from_stem(stem: str) -> str:
    if "_" in stem:
        kind, rest = stem.split("_", 1)
        sign = {"m": -1, "p": 1}[rest[0]]
        return lagged_id(kind, sign * int(rest[1:]))
    return stem


def _normalize_lags(lags):
    lags = [int(l) for l in lags]
    if any(l == 0 for l in lags):
        raise InputError("lag 0 duplicates the volume factor; use non-zero lags")
    if len(set(lags)) != len(lags):
        raise InputError(f"duplicate lags in {lags}")
    return sorted(lags)


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric ``n x n`` matrix tagged with the factor that produced it.

    ``kind`` selects the validation rule: ``"pearson"`` (entries in [-1, 1],
    unit diagonal), ``"jaccard"`` (entries in [0, 1], 0/1 diagonal) or
    ``"generic"`` (symmetry only). ``undefined`` counts entity pairs whose
    value was undefined and filled with 0.
    """

    factor: str
    order: tuple[str, ...]
    values: np.ndarray
    kind: str = "generic"
    undefined: int = 0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        order = tuple(self.order)
        n = len(order)
        if values.shape != (n, n):
            raise InputError(f"{self.factor}: matrix shape {values.shape} does not match "
                             f"{n} entities")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "order", order)

    @property
    def n(self) -> int:
        return len(self.order)

    def validate(self, tol: float = _SYM_TOL) -> None:
        """Raise :class:`InputError` if the matrix breaks its invariants."""
        check_matrix(self.values, self.kind, tol=tol, name=self.factor)


def check_matrix(values, kind="generic", tol=_SYM_TOL, name="matrix") -> None:
    a = np.asarray(values, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"{name}: not a square matrix")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name}: non-finite entries")
    if np.max(np.abs(a - a.T), initial=0.0) > tol:
        raise InputError(f"{name}: not symmetric")
    diag = np.diag(a)
    if kind == "pearson":
        if np.any(np.abs(a) > 1 + tol):
            raise InputError(f"{name}: entries outside [-1, 1]")
        if np.any(diag != 1):
            raise InputError(f"{name}: diagonal is not 1")
    elif kind == "jaccard":
        if np.any(a < -tol) or np.any(a > 1 + tol):
            raise InputError(f"{name}: entries outside [0, 1]")
        if not np.all((diag == 0) | (diag == 1)):
            raise InputError(f"{name}: diagonal entries must be 0 or 1")
    elif kind != "generic":
        raise InputError(f"unknown matrix kind {kind!r}")


@dataclass(frozen=True)
class GraphSet:
    """Ordered collection of correlation matrices over one entity order."""

    matrices: tuple[CorrelationMatrix, ...]

    def __post_init__(self):
        mats = tuple(self.matrices)
        if not mats:
            raise InputError("a graph set needs at least one matrix")
        order = mats[0].order
        for m in mats[1:]:
            if m.order != order:
                raise InputError(f"{m.factor}: entity order differs from {mats[0].factor}")
        object.__setattr__(self, "matrices", mats)

    @property
    def order(self) -> tuple[str, ...]:
        return self.matrices[0].order

    @property
    def ids(self) -> list[str]:
        return [m.factor for m in self.matrices]

    def stack(self) -> np.ndarray:
        """Matrices as an array of shape ``(m, n, n)``."""
        return np.stack([m.values for m in self.matrices])

    def __len__(self):
        return len(self.matrices)

    def __iter__(self):
        return iter(self.matrices)

    def __getitem__(self, key):
        if isinstance(key, str):
            for m in self.matrices:
                if m.factor == key:
                    return m
            raise KeyError(key)
        return self.matrices[key]


@dataclass(frozen=True)
class GroundTruthSet:
    tv: CorrelationMatrix
    cp: CorrelationMatrix
    hv: CorrelationMatrix

    def items(self):
        return [("tv", self.tv), ("cp", self.cp), ("hv", self.hv)]

    def __getitem__(self, key):
        return getattr(self, key)


# -- Pearson-derived graphs -------------------------------------------------

def pearson_matrix(vectors: Sequence[np.ndarray], order: Sequence[str],
                   factor: str) -> CorrelationMatrix:
    """Pairwise Pearson matrix; undefined pairs become 0 and are counted."""
    n = len(vectors)
    out = np.eye(n)
    undefined = 0
    for i in range(n):
        for j in range(i + 1, n):
            r = pearson(vectors[i], vectors[j])
            if r is None:
                undefined += 1
                r = 0.0
            out[i, j] = out[j, i] = r
    return CorrelationMatrix(factor, tuple(order), out, kind="pearson", undefined=undefined)


def _ordered_series(series: Mapping[str, DailySeries], order=None):
    if order is None:
        order = list(series)
    windows = {series[s].window for s in order}
    if len(windows) != 1:
        raise InputError("daily series do not share one time window")
    kinds = {series[s].kind for s in order}
    return list(order), [series[s].values for s in order], kinds.pop()


def _smooth(vectors, smoothing):
    if smoothing is None:
        return vectors
    return [sma_smooth(v, smoothing) for v in vectors]


def build_volume_graph(series: Mapping[str, DailySeries],
                       smoothing: SmoothingConfig | int | None = 10,
                       order: Sequence[str] | None = None) -> CorrelationMatrix:
    """Pearson correlations between (smoothed) daily count series."""
    order, vectors, kind = _ordered_series(series, order)
    if len(order) < 2:
        raise InputError("need at least 2 entities")
    return pearson_matrix(_smooth(vectors, smoothing), order, "t" if kind == "tweet" else "r")


def build_lagged_graph(series: Mapping[str, DailySeries],
                       smoothing: SmoothingConfig | int | None,
                       spec: LagSpec | int,
                       order: Sequence[str] | None = None) -> CorrelationMatrix:
    """Pearson correlations with the column entity's series shifted by the lag.

    Entry ``(i, j)`` correlates ``x_i`` with ``x_j`` offset by ``lag`` days;
    the result is symmetrized as ``(S + S.T) / 2`` and the diagonal set to 1.
    """
    lag = spec.lag if isinstance(spec, LagSpec) else int(spec)
    order, vectors, kind = _ordered_series(series, order)
    n = len(order)
    if n < 2:
        raise InputError("need at least 2 entities")
    LagSpec(lag).check(vectors[0].size)
    vectors = _smooth(vectors, smoothing)
    raw = np.zeros((n, n))
    bad = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            r = pearson(*apply_lag(vectors[i], vectors[j], lag))
            if r is None:
                bad[i, j] = True
            else:
                raw[i, j] = r
    out = (raw + raw.T) / 2
    np.fill_diagonal(out, 1.0)
    undefined = int(np.count_nonzero(np.triu(bad | bad.T, 1)))
    name = lagged_id("t" if kind == "tweet" else "r", lag)
    return CorrelationMatrix(name, tuple(order), out, kind="pearson", undefined=undefined)


# -- co-appearance ----------------------------------------------------------

def build_cooccurrence_graph(table: MentionSetTable,
                             order: Sequence[str] | None = None) -> CorrelationMatrix:
    """Jaccard overlap of per-entity document sets.

    Pairs whose union is empty get 0 and are counted as undefined; the
    diagonal is 1 for entities with at least one document, else 0.
    """
    order = list(table.sets) if order is None else list(order)
    n = len(order)
    if n < 2:
        raise InputError("need at least 2 entities")
    sets = [table.sets[s] for s in order]
    out = np.zeros((n, n))
    undefined = 0
    for i in range(n):
        out[i, i] = 1.0 if sets[i] else 0.0
        for j in range(i + 1, n):
            union = len(sets[i] | sets[j])
            if union == 0:
                undefined += 1
                continue
            out[i, j] = out[j, i] = len(sets[i] & sets[j]) / union
    name = "ct" if table.kind == "tweet" else "cr"
    return CorrelationMatrix(name, tuple(order), out, kind="jaccard", undefined=undefined)


def build_factor_set(records: Iterable[MentionRecord], catalog: EntityCatalog,
                     window: TimeWindow, lags: Sequence[int] = DEFAULT_LAGS,
                     smoothing: SmoothingConfig | int | None = 10) -> GraphSet:
    """All Twitter-side factor matrices in canonical order.

    Smoothing applies to the volume and lagged-volume series only, never
    to the co-appearance sets.
    """
    records = list(records)
    lags = _normalize_lags(lags)
    order = catalog.symbols
    series = {k: build_daily_series(records, catalog, window, k) for k in ("tweet", "retweet")}
    mats = [build_volume_graph(series["tweet"], smoothing, order),
            build_volume_graph(series["retweet"], smoothing, order)]
    for kind in ("tweet", "retweet"):
        mats += [build_lagged_graph(series[kind], smoothing, l, order) for l in lags]
    for kind in ("tweet", "retweet"):
        mats.append(build_cooccurrence_graph(
            build_mention_sets(records, catalog, window, kind), order))
    return GraphSet(tuple(mats))


# -- market ground truth ----------------------------------------------------

def build_ground_truth(market: Mapping[str, MarketSeries], window: TimeWindow,
                       vol_window: int = 21,
                       order: Sequence[str] | None = None) -> GroundTruthSet:
    """Trading-volume, log-return and volatility correlation matrices.

    All three are computed over the trading days inside ``window`` that
    every entity shares. Each entity needs ``vol_window`` trading days of
    history before the first of those days so the volatility of the first
    day is defined.
    """
    order = list(market) if order is None else list(order)
    lacking = [s for s in order if s not in market]
    if lacking:
        raise InputError(f"no market data for symbol(s) {', '.join(lacking)}")
    common: set[dt.date] | None = None
    for s in order:
        days = {d for d in market[s].dates if d in window}
        common = days if common is None else common & days
    days = sorted(common or ())
    if len(days) < 2:
        raise InputError(f"fewer than 2 shared trading days in {window.start}..{window.end}")

    volumes, returns, vols = [], [], []
    for s in order:
        ms = market[s]
        index = {d: i for i, d in enumerate(ms.dates)}
        pos = np.array([index[d] for d in days])
        if pos[0] < vol_window:
            raise InputError(
                f"insufficient history for volatility: {s} has {pos[0]} trading day(s) "
                f"before {days[0]}, needs {vol_window}")
        rets = log_returns(ms.close)          # rets[j] ends on date j + 1
        vol = rolling_volatility(rets, vol_window)  # vol[j] ends on date j + vol_window
        volumes.append(ms.volume[pos])
        returns.append(rets[pos - 1])
        vols.append(vol[pos - vol_window])
    return GroundTruthSet(pearson_matrix(volumes, order, "tv"),
                          pearson_matrix(returns, order, "cp"),
                          pearson_matrix(vols, order, "hv"))


# -- file format ------------------------------------------------------------

def _fmt(v: float) -> str:
    s = f"{v:.10g}"
    return "0" if s == "-0" else s


def write_matrix(matrix: CorrelationMatrix | np.ndarray, dest: str | os.PathLike | TextIO,
                 order: Sequence[str] | None = None) -> None:
    """Write a labelled matrix as CSV with 10 significant digits."""
    if isinstance(matrix, CorrelationMatrix):
        values, order = matrix.values, matrix.order
    else:
        values = np.asarray(matrix, dtype=float)
        if order is None:
            raise InputError("order is required when writing a bare array")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([""] + list(order))
    for sym, row in zip(order, values):
        w.writerow([sym] + [_fmt(v) for v in row])
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        dest.write(buf.getvalue())


def read_matrix(source: str | os.PathLike | TextIO, factor: str | None = None,
                kind: str = "generic") -> CorrelationMatrix:
    if isinstance(source, (str, os.PathLike)):
        if factor is None:
            factor = factor_from_stem(os.path.splitext(os.path.basename(source))[0])
        with open(source, encoding="utf-8", newline="") as fh:
            return read_matrix(fh, factor, kind)
    rows = list(csv.reader(source))
    if not rows:
        raise InputError(f"{factor}: empty matrix file")
    order = tuple(rows[0][1:])
    body = rows[1:]
    if [r[0] for r in body] != list(order):
        raise InputError(f"{factor}: row labels do not match column labels")
    try:
        values = np.array([[float(v) for v in r[1:]] for r in body])
    except ValueError as exc:
        raise InputError(f"{factor}: unreadable matrix entry: {exc}") from None
    return CorrelationMatrix(factor or "matrix", order, values, kind=kind)
