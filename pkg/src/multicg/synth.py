"""Synthetic views with a planted correlation structure.

The planted truth ``C*`` is the correlation matrix of a random low-rank
factor model. View ``i`` mixes it with independent symmetric noise, pair
by pair::

    V_i[p, q] = R_i[p, q] * C*[p, q] + (1 - R_i[p, q]) * N_i[p, q]

where ``R_i`` holds per-pair reliabilities in [0, 1] and ``N_i`` is
Gaussian with standard deviation ``noise_scale``. Views are clamped to
[-1, 1] and get a unit diagonal.

Reliability patterns:

``uniform``
    every pair of every view has reliability ``cfg.reliability``.
``per-pair-random``
    reliabilities are uniform on [0, 1]; for each pair one randomly chosen
    view is redrawn on [0.5, 1], so every pair has at least one good view.
``blockwise``
    entities fall into random groups; the pair ``(p, q)`` is reliable
    (uniform on [0.5, 1]) in view ``(g(p) + g(q)) mod m`` and unreliable
    (uniform on [0, 0.5)) in the others.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from .evaluation import avg_dcg
from .exceptions import InputError
from .factors import CorrelationMatrix, GraphSet, read_matrix, write_matrix

PATTERNS = ("uniform", "per-pair-random", "blockwise")


@dataclass(frozen=True)
class NoiseConfig:
    noise_scale: float = 0.5
    reliability_pattern: str = "per-pair-random"
    n_views: int = 6
    reliability: float = 1.0
    factor_rank: int = 3

    def __post_init__(self):
        if self.noise_scale < 0:
            raise InputError("noise_scale must be non-negative")
        if self.reliability_pattern not in PATTERNS:
            raise InputError(f"reliability_pattern must be one of {PATTERNS}")
        if self.n_views < 2:
            raise InputError("need at least 2 views")
        if not 0 <= self.reliability <= 1:
            raise InputError("reliability must lie in [0, 1]")
        if self.factor_rank < 1:
            raise InputError("factor_rank must be positive")


@dataclass(frozen=True)
class PlantedScenario:
    truth: CorrelationMatrix
    views: GraphSet
    reliability: np.ndarray  # (m, n, n)
    seed: int
    config: NoiseConfig


def symbols_for(n: int) -> tuple[str, ...]:
    """Synthetic entity symbols ``A``, ``B``, ..., ``Z``, ``AA``, ... in order."""
    out = []
    for i in range(n):
        s, i = "", i + 1
        while i:
            i, r = divmod(i - 1, 26)
            s = chr(65 + r) + s
        out.append(s)
    return tuple(sorted(out, key=lambda s: (len(s), s)))


def _planted_truth(n, rank, rng):
    W = rng.normal(size=(n, rank))
    cov = W @ W.T + np.diag(rng.uniform(0.1, 1.0, n))
    d = np.sqrt(np.diag(cov))
    C = cov / np.outer(d, d)
    C = (C + C.T) / 2
    np.fill_diagonal(C, 1.0)
    return C


def _symmetric_upper(a):
    upper = np.triu(a, 1)
    return upper + np.swapaxes(upper, -1, -2)


def _reliability(n, cfg, rng):
    m = cfg.n_views
    if cfg.reliability_pattern == "uniform":
        R = np.full((m, n, n), float(cfg.reliability))
    elif cfg.reliability_pattern == "per-pair-random":
        R = rng.uniform(0.0, 1.0, (m, n, n))
        best = rng.integers(0, m, (n, n))
        high = rng.uniform(0.5, 1.0, (n, n))
        for i in range(m):
            R[i][best == i] = high[best == i]
        R = _symmetric_upper(R)
    else:
        groups = rng.integers(0, m, n)
        owner = (groups[:, None] + groups[None, :]) % m
        low = rng.uniform(0.0, 0.5, (m, n, n))
        high = rng.uniform(0.5, 1.0, (m, n, n))
        R = np.where(np.arange(m)[:, None, None] == owner[None], high, low)
        R = _symmetric_upper(R)
    for i in range(m):
        np.fill_diagonal(R[i], 1.0)
    return R


def generate_planted(n: int, cfg: NoiseConfig | None = None, seed: int = 0) -> PlantedScenario:
    if n < 3:
        raise InputError("planted scenarios need at least 3 entities")
    cfg = cfg or NoiseConfig()
    rng = np.random.default_rng(seed)
    order = symbols_for(n)
    C = _planted_truth(n, min(cfg.factor_rank, n), rng)
    R = _reliability(n, cfg, rng)
    views = []
    for i in range(cfg.n_views):
        noise = _symmetric_upper(rng.normal(scale=cfg.noise_scale, size=(n, n))) \
            if cfg.noise_scale > 0 else np.zeros((n, n))
        V = np.clip(R[i] * C + (1 - R[i]) * noise, -1.0, 1.0)
        np.fill_diagonal(V, 1.0)
        views.append(CorrelationMatrix(f"view{i}", order, V, kind="pearson"))
    truth = CorrelationMatrix("truth", order, C, kind="pearson")
    return PlantedScenario(truth, GraphSet(tuple(views)), R, int(seed), cfg)


def score_recovery(scenario: PlantedScenario, matrix, k: int = 10) -> float:
    """avgDCG@k of ``matrix`` against the planted truth."""
    if isinstance(matrix, CorrelationMatrix):
        matrix = matrix.values
    return avg_dcg(CorrelationMatrix("candidate", scenario.truth.order, matrix),
                   scenario.truth, k).avg_dcg


def dump_scenario(scenario: PlantedScenario, directory: str | os.PathLike) -> None:
    os.makedirs(directory, exist_ok=True)
    write_matrix(scenario.truth, os.path.join(directory, "truth.csv"))
    for i, view in enumerate(scenario.views):
        write_matrix(view, os.path.join(directory, f"view{i}.csv"))
        write_matrix(scenario.reliability[i], os.path.join(directory, f"reliability{i}.csv"),
                     order=scenario.truth.order)
    manifest = {"seed": scenario.seed, "n": scenario.truth.n, "config": asdict(scenario.config)}
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_scenario(directory: str | os.PathLike) -> PlantedScenario:
    """Read a scenario written by :func:`dump_scenario`.

    Matrices come back at the 10 significant digits of the file format.
    """
    with open(os.path.join(directory, "manifest.json"), encoding="utf-8") as fh:
        manifest = json.load(fh)
    cfg = NoiseConfig(**manifest["config"])
    truth = read_matrix(os.path.join(directory, "truth.csv"), "truth", kind="pearson")
    views = tuple(read_matrix(os.path.join(directory, f"view{i}.csv"), f"view{i}", kind="pearson")
                  for i in range(cfg.n_views))
    R = np.stack([read_matrix(os.path.join(directory, f"reliability{i}.csv")).values
                  for i in range(cfg.n_views)])
    return PlantedScenario(truth, GraphSet(views), R, manifest["seed"], cfg)
