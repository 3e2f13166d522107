"""Ranking quality of a candidate correlation matrix against a reference.

Each row is turned into a peer list ordered by ``|correlation|``
(descending, ties broken by symbol). The top ``k`` peers of the candidate
list are graded against the reference list: a peer at reference position
``p <= k`` earns ``k - p + 1``, anything else earns 0. Grades are
discounted by ``log2(rank + 1)`` and summed (DCG@k); the average over
entities is avgDCG@k.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .exceptions import InputError
from .factors import CorrelationMatrix


@dataclass(frozen=True)
class RankedLists:
    order: tuple[str, ...]
    lists: tuple[tuple[str, ...], ...]

    def __getitem__(self, symbol: str) -> tuple[str, ...]:
        return self.lists[self.order.index(symbol)]


@dataclass(frozen=True)
class EvalReport:
    k: int
    per_entity: dict[str, float]
    avg_dcg: float
    method: str = ""
    truth: str = ""

    def to_dict(self):
        return {"method": self.method, "truth": self.truth, "k": self.k,
                "avg_dcg": self.avg_dcg, "per_entity": dict(self.per_entity)}


def _as_labelled(matrix, order=None):
    if isinstance(matrix, CorrelationMatrix):
        return matrix.values, matrix.order
    values = np.asarray(matrix, dtype=float)
    if order is None:
        order = tuple(f"{i:06d}" for i in range(values.shape[0]))
    return values, tuple(order)


def rank_rows(matrix: CorrelationMatrix | np.ndarray, order=None) -> RankedLists:
    """Per-entity peer lists sorted by absolute correlation, self excluded."""
    values, order = _as_labelled(matrix, order)
    n = len(order)
    if n < 2:
        raise InputError("ranking needs at least 2 entities")
    lists = []
    for i in range(n):
        peers = [j for j in range(n) if j != i]
        peers.sort(key=lambda j: (-abs(values[i, j]), order[j]))
        lists.append(tuple(order[j] for j in peers))
    return RankedLists(order, tuple(lists))


def relevance_grades(candidate: Sequence[str], ideal: Sequence[str], k: int) -> np.ndarray:
    """Grades for the top ``k`` of ``candidate`` judged against ``ideal``."""
    if k < 1 or k > len(ideal):
        raise InputError(f"k must be in 1..{len(ideal)}, got {k}")
    position = {s: p for p, s in enumerate(ideal[:k], 1)}
    return np.array([k - position[s] + 1 if s in position else 0
                     for s in candidate[:k]], dtype=float)


def dcg_k(grades) -> float:
    """``sum_j grades[j] / log2(j + 1)`` over 1-based ranks ``j``."""
    g = np.asarray(grades, dtype=float)
    if g.size < 1:
        raise InputError("dcg needs at least one grade")
    return float(np.sum(g / np.log2(np.arange(2, g.size + 2))))


def dcg_ceiling(k: int) -> float:
    """DCG@k of a perfectly ranked list under this grading scheme."""
    return math.fsum((k - j + 1) / math.log2(j + 1) for j in range(1, k + 1))


def avg_dcg(candidate: CorrelationMatrix | np.ndarray, truth: CorrelationMatrix | np.ndarray,
            k: int, method: str | None = None, truth_id: str | None = None) -> EvalReport:
    """Mean per-entity DCG@k of ``candidate``'s rankings against ``truth``'s."""
    cand_values, cand_order = _as_labelled(candidate)
    truth_values, truth_order = _as_labelled(truth)
    if isinstance(candidate, CorrelationMatrix) != isinstance(truth, CorrelationMatrix):
        # a bare array inherits the labelled side's order
        if isinstance(candidate, CorrelationMatrix):
            truth_order = cand_order
        else:
            cand_order = truth_order
    if cand_order != truth_order:
        raise InputError("candidate and truth have different entity orders")
    n = len(truth_order)
    if not 1 <= k <= n - 1:
        raise InputError(f"k must be in 1..{n - 1} for {n} entities, got {k}")
    lc = rank_rows(cand_values, cand_order)
    lt = rank_rows(truth_values, truth_order)
    per_entity = {s: dcg_k(relevance_grades(a, b, k))
                  for s, a, b in zip(truth_order, lc.lists, lt.lists)}
    mean = math.fsum(per_entity.values()) / n
    if method is None:
        method = getattr(candidate, "factor", "")
    if truth_id is None:
        truth_id = getattr(truth, "factor", "")
    return EvalReport(k, per_entity, mean, method, truth_id)


def method_label(factor: str) -> str:
    """Table row label for a factor id, e.g. ``t(-1)`` -> ``SC_t(-1)``."""
    if factor in ("SA", "multi-CG"):
        return factor
    return f"SC_{factor}"


def comparison_table(methods: Mapping[str, CorrelationMatrix], truth: CorrelationMatrix,
                     ks: Sequence[int]) -> list[list]:
    """Rows ``[method, avgDCG@k1, avgDCG@k2, ...]`` in the order of ``methods``."""
    rows = []
    for name, matrix in methods.items():
        rows.append([name] + [avg_dcg(matrix, truth, k).avg_dcg for k in ks])
    return rows


def format_table(rows: list[list], ks: Sequence[int]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method"] + [f"k={k}" for k in ks])
    for row in rows:
        w.writerow([row[0]] + [f"{v:.6f}" for v in row[1:]])
    return buf.getvalue()
