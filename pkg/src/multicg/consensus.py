"""Consensus correlation matrix from multiple views.

Given view matrices ``E_1..E_m`` the consensus ``O`` and per-view
restoration matrices ``M_i`` minimize::

    f(O, M) = sum_i ||E_i - O M_i||_F^2 + alpha ||O||_F^2

by exact alternating minimization: with ``O`` fixed each ``M_i`` solves
``O'O M_i = O'E_i``; with all ``M_i`` fixed ``O`` solves
``O (M M' + alpha I) = E M'`` where ``E = [E_1 .. E_m]`` and
``M = [M_1 .. M_m]`` are concatenated column-wise. ``O`` starts at the
identity.

The mirror-image formulation ``min sum_i ||E_i N_i - O||`` is deliberately
absent: ``O = N_i = 0`` is always a global minimizer of it.

Note that whenever ``O`` is invertible the M-step reconstructs every view
exactly, so after each sweep ``f = alpha ||O||_F^2`` and the infimum 0 is
only approached as ``O`` shrinks. The objective therefore decreases
sublinearly and a tight relative tolerance may not be met within
``max_iter``; the *direction* ``O / ||O||_F`` settles much earlier and is
reported as ``direction_change``.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import lapack
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_is_fitted

from .exceptions import InputError, NumericalError
from .factors import CorrelationMatrix, GraphSet
from .validation import check_square, check_views

logger = logging.getLogger(__name__)

# A direct M-step solve whose relative residual exceeds this is treated as
# singular and replaced by a minimum-norm least-squares solve.
_SOLVE_RTOL = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    alpha: float = 0.25
    tol: float = 1e-8
    max_iter: int = 1000
    ridge: float = 0.0
    normalize_views: bool = False

    def __post_init__(self):
        if not self.alpha > 0:
            raise InputError(f"alpha must be positive, got {self.alpha}")
        if not self.tol > 0:
            raise InputError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise InputError(f"max_iter must be a positive integer, got {self.max_iter}")
        if not self.ridge >= 0:
            raise InputError(f"ridge must be non-negative, got {self.ridge}")

    def to_dict(self):
        return asdict(self)


@dataclass
class ConsensusResult:
    """Output of :func:`solve_multicg`.

    ``objective_trace[0]`` is the objective at the starting point
    (``O = I``, ``M_i = 0``); entry ``k`` is the value after sweep ``k``.
    With a positive ``ridge`` the trace includes ``ridge * sum_i ||M_i||^2``,
    the quantity the sweeps actually minimize.
    ``m_residuals`` / ``o_residuals`` hold the Frobenius norms of the
    stationarity residuals after each M- and O-step.
    """

    O: np.ndarray
    M: list[np.ndarray]
    objective_trace: list[float]
    iterations: int
    converged: bool
    config: SolverConfig
    m_residuals: list[float] = field(default_factory=list)
    o_residuals: list[float] = field(default_factory=list)
    lstsq_fallbacks: int = 0
    direction_change: float = float("nan")

    def to_dict(self, matrices=True):
        out = {
            "config": self.config.to_dict(),
            "iterations": self.iterations,
            "converged": self.converged,
            "objective_trace": [float(v) for v in self.objective_trace],
            "final_objective": float(self.objective_trace[-1]),
            "lstsq_fallbacks": self.lstsq_fallbacks,
            "direction_change": float(self.direction_change),
            "max_m_residual": float(max(self.m_residuals, default=0.0)),
            "max_o_residual": float(max(self.o_residuals, default=0.0)),
        }
        if matrices:
            out["O"] = self.O.tolist()
            out["M"] = [m.tolist() for m in self.M]
        return out


def _stack(E):
    return check_views(E)


def _concat(stack):
    # (m, n, n) -> (n, m * n) as [X_1, ..., X_m]
    return np.hstack(list(stack))


def _split(cat, m):
    return np.hsplit(cat, m)


def objective(O, M, E, alpha) -> float:
    """``sum_i ||E_i - O M_i||_F^2 + alpha ||O||_F^2``."""
    O = check_square(O, "O")
    Ms, Es = _stack(M), _stack(E)
    if Ms.shape != Es.shape or Es.shape[1] != O.shape[0]:
        raise InputError(f"dimension mismatch: O {O.shape}, M {Ms.shape}, E {Es.shape}")
    fit = sum(float(np.sum((e - O @ m) ** 2)) for e, m in zip(Es, Ms))
    return fit + alpha * float(np.sum(O ** 2))


def _solve(A, B):
    """``A X = B`` through LAPACK gesv; ``None`` if ``A`` is exactly singular."""
    _, _, X, info = lapack.dgesv(A, B)
    return X if info == 0 else None


def _m_step(O, Ecat, ridge):
    """Return ``(M, O M - E, used_lstsq)`` for the concatenated views."""
    if ridge > 0:
        n = O.shape[0]
        M = np.linalg.solve(O.T @ O + ridge * np.eye(n), O.T @ Ecat)
        return M, O @ M - Ecat, False
    # With O nonsingular, O'O M = O'E reduces to O M = E, which avoids
    # squaring the condition number.
    M = _solve(O, Ecat)
    if M is not None and np.all(np.isfinite(M)):
        R = O @ M - Ecat
        scale = np.linalg.norm(O) * np.linalg.norm(M) + np.linalg.norm(Ecat)
        if np.linalg.norm(R) <= _SOLVE_RTOL * scale:
            return M, R, False
    M = np.linalg.lstsq(O, Ecat, rcond=None)[0]
    return M, O @ M - Ecat, True


def _o_step(Mcat, Ecat, alpha):
    A = Mcat @ Mcat.T + alpha * np.eye(Mcat.shape[0])
    # O A = E M'  <=>  A O' = M E'   (A is symmetric positive definite)
    return _solve(A, Mcat @ Ecat.T).T


def update_M(O, E, ridge: float = 0.0) -> list[np.ndarray]:
    """Restoration matrices minimizing the fit term for a fixed ``O``.

    Solves ``(O'O + ridge I) M_i = O'E_i``. With ``ridge = 0`` and a
    singular ``O'O`` the minimum-norm least-squares solution is returned.
    """
    O = check_square(O, "O")
    Es = _stack(E)
    if Es.shape[1] != O.shape[0]:
        raise InputError(f"dimension mismatch: O {O.shape}, E {Es.shape}")
    Mcat, _, _ = _m_step(O, _concat(Es), ridge)
    return _split(Mcat, len(Es))


def update_O(M, E, alpha: float) -> np.ndarray:
    """Consensus minimizing the objective for fixed restoration matrices.

    ``O = (sum_i E_i M_i') (sum_i M_i M_i' + alpha I)^-1``.
    """
    if not alpha > 0:
        raise InputError("alpha must be positive")
    Ms, Es = _stack(M), _stack(E)
    if Ms.shape != Es.shape:
        raise InputError(f"dimension mismatch: M {Ms.shape}, E {Es.shape}")
    return _o_step(_concat(Ms), _concat(Es), alpha)


def _zscore(stack):
    out = np.empty_like(stack)
    for i, e in enumerate(stack):
        sd = e.std()
        out[i] = (e - e.mean()) / sd if sd > 0 else e - e.mean()
    return out


def solve_multicg(E, cfg: SolverConfig | None = None, **overrides) -> ConsensusResult:
    """Alternate exact M- and O-updates starting from ``O = I``.

    Stops once ``|f_k - f_{k-1}| / max(1, f_{k-1}) < tol`` or after
    ``max_iter`` sweeps. Raises :class:`NumericalError` if the objective
    stops being finite.
    """
    if cfg is None:
        cfg = SolverConfig(**overrides)
    elif overrides:
        cfg = SolverConfig(**{**cfg.to_dict(), **overrides})
    Es = _stack(E)
    if cfg.normalize_views:
        Es = _zscore(Es)
    m, n, _ = Es.shape
    Ecat = _concat(Es)
    alpha = cfg.alpha
    eye = np.eye(n)

    def f(O, Mcat):
        value = float(np.sum((Ecat - O @ Mcat) ** 2)) + alpha * float(np.sum(O ** 2))
        if cfg.ridge:
            value += cfg.ridge * float(np.sum(Mcat ** 2))
        return value

    O = eye.copy()
    Mcat = np.zeros_like(Ecat)
    trace = [f(O, Mcat)]
    m_res, o_res = [], []
    fallbacks = 0
    converged = False
    for k in range(1, cfg.max_iter + 1):
        Mcat, R, fell_back = _m_step(O, Ecat, cfg.ridge)
        fallbacks += fell_back
        # O'O M - O'E, plus the ridge term when present
        grad = O.T @ R
        if cfg.ridge:
            grad += cfg.ridge * Mcat
        m_res.append(float(np.sqrt(np.max(np.sum(grad.reshape(n, m, n) ** 2, axis=(0, 2))))))

        O_prev = O
        A = Mcat @ Mcat.T + alpha * eye
        B = Ecat @ Mcat.T
        O = _solve(A, B.T).T
        o_res.append(float(np.linalg.norm(O @ A - B)))

        value = f(O, Mcat)
        if not np.isfinite(value) or not np.all(np.isfinite(O)):
            raise NumericalError(f"objective became non-finite at iteration {k}", iteration=k)
        prev = trace[-1]
        trace.append(value)
        if abs(value - prev) / max(1.0, prev) < cfg.tol:
            converged = True
            break

    direction = _direction_change(O_prev, O)
    if not converged:
        logger.info("multi-view solver stopped at max_iter=%d (last relative change %.3g)",
                    cfg.max_iter, abs(trace[-1] - trace[-2]) / max(1.0, trace[-2]))
    return ConsensusResult(O=O, M=_split(Mcat, m), objective_trace=trace, iterations=k,
                           converged=converged, config=cfg, m_residuals=m_res,
                           o_residuals=o_res, lstsq_fallbacks=fallbacks,
                           direction_change=direction)


def _direction_change(A, B):
    na, nb = np.linalg.norm(A), np.linalg.norm(B)
    if na == 0 or nb == 0:
        return float(na != nb)
    return float(np.linalg.norm(A / na - B / nb))


def simple_average(E, w=None, order=None) -> CorrelationMatrix:
    """Weighted elementwise average ``(1/m) sum_i w_i E_i``.

    Uniform weights ``w_i = 1`` are used when ``w`` is omitted.
    """
    if isinstance(E, GraphSet) and order is None:
        order = E.order
    Es = _stack(E)
    m, n, _ = Es.shape
    w = np.ones(m) if w is None else np.asarray(w, dtype=float)
    if w.shape != (m,):
        raise InputError(f"expected {m} weights, got {w.shape}")
    if np.any(w < 0) or not np.any(w > 0):
        raise InputError("weights must be non-negative and not all zero")
    values = np.tensordot(w, Es, axes=1) / m
    order = tuple(order) if order is not None else tuple(str(i) for i in range(n))
    return CorrelationMatrix("SA", order, values)


# -- estimator interface ----------------------------------------------------

class MultiCG(TransformerMixin, BaseEstimator):
    """Consensus correlation learner over a set of view matrices.

    Parameters
    ----------
    alpha : float, default=0.25
        Weight of the ``||O||_F^2`` penalty.
    tol : float, default=1e-8
        Relative objective change that stops the iteration.
    max_iter : int, default=1000
        Maximum number of full sweeps.
    ridge : float, default=0.0
        Optional Tikhonov term added to ``O'O`` in the M-step.
    normalize_views : bool, default=False
        Z-score each view before fitting.

    Attributes
    ----------
    consensus_ : ndarray of shape (n, n)
    restorations_ : ndarray of shape (m, n, n)
    objective_trace_ : list of float
    n_iter_ : int
    converged_ : bool
    result_ : ConsensusResult

    ``transform`` maps views to their restoration matrices under the fitted
    consensus.
    """

    def __init__(self, alpha=0.25, tol=1e-8, max_iter=1000, ridge=0.0,
                 normalize_views=False):
        self.alpha = alpha
        self.tol = tol
        self.max_iter = max_iter
        self.ridge = ridge
        self.normalize_views = normalize_views

    def fit(self, X, y=None):
        order = getattr(X, "order", None)
        views = check_views(X)
        cfg = SolverConfig(alpha=self.alpha, tol=self.tol, max_iter=self.max_iter,
                           ridge=self.ridge, normalize_views=self.normalize_views)
        self.result_ = solve_multicg(views, cfg)
        if not self.result_.converged:
            warnings.warn(f"objective did not reach tol={self.tol} within "
                          f"max_iter={self.max_iter} sweeps", ConvergenceWarning)
        self.consensus_ = self.result_.O
        self.restorations_ = np.stack(self.result_.M)
        self.objective_trace_ = self.result_.objective_trace
        self.n_iter_ = self.result_.iterations
        self.converged_ = self.result_.converged
        self.n_views_ = views.shape[0]
        self.order_ = tuple(order) if order is not None else None
        return self

    def transform(self, X):
        check_is_fitted(self, "consensus_")
        views = check_views(X)
        if views.shape[1] != self.consensus_.shape[0]:
            raise InputError(f"views have {views.shape[1]} entities, "
                             f"fitted consensus has {self.consensus_.shape[0]}")
        if self.normalize_views:
            views = _zscore(views)
        return np.stack(update_M(self.consensus_, views, self.ridge))

    def consensus_matrix(self, name="multi-CG") -> CorrelationMatrix:
        check_is_fitted(self, "consensus_")
        n = self.consensus_.shape[0]
        order = self.order_ or tuple(str(i) for i in range(n))
        return CorrelationMatrix(name, order, self.consensus_)


class SimpleAverage(BaseEstimator):
    """Weighted elementwise mean of the views (uniform weights by default)."""

    def __init__(self, weights=None):
        self.weights = weights

    def fit(self, X, y=None):
        order = getattr(X, "order", None)
        self.consensus_ = simple_average(check_views(X), self.weights).values
        self.order_ = tuple(order) if order is not None else None
        return self

    def consensus_matrix(self, name="SA") -> CorrelationMatrix:
        check_is_fitted(self, "consensus_")
        n = self.consensus_.shape[0]
        order = self.order_ or tuple(str(i) for i in range(n))
        return CorrelationMatrix(name, order, self.consensus_)
