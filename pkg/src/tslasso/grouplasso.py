"""Group lasso over tangent-space regressions.

The design is a stack of ``n'`` matrices ``X_i`` of shape ``(d, p)``; the
coefficients are ``n'`` matrices ``B_i`` of shape ``(p, d)``. The objective is

    J(B) = 1/2 sum_i ||I_d - X_i B_i||_F^2 + lam / sqrt(d n') sum_j ||B_.j||_2

where ``B_.j`` concatenates row ``j`` of every ``B_i``. Arrays are held as
``X[i, :, j]`` and ``B[i, j, :]``.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .exceptions import NotConverged, ShapeError, UnreachableSupport

logger = logging.getLogger(__name__)

ZERO_TOL = 1e-8


@dataclass(frozen=True)
class ProjectedDesign:
    """Per-point projected gradients ``X_i = T_i^T [grad f_j]``.

    Parameters
    ----------
    blocks : array of shape (n', d, p)
    gammas : array of shape (p,)
        Normalization scales that were divided out of the gradients.
    point_ids : array of shape (n',)
        Indices of the design points in the source cloud.
    """

    blocks: np.ndarray
    gammas: Optional[np.ndarray] = None
    point_ids: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.asarray(self.blocks, dtype=np.float64)
        if X.ndim == 2:
            X = X[None]
        if X.ndim != 3 or min(X.shape) < 1:
            raise ShapeError(f"design must have shape (n', d, p), got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ShapeError("design contains NaN or Inf")
        object.__setattr__(self, "blocks", X)
        g = np.ones(X.shape[2]) if self.gammas is None else np.asarray(self.gammas, dtype=np.float64)
        if g.shape != (X.shape[2],):
            raise ShapeError(f"gammas has shape {g.shape}, expected ({X.shape[2]},)")
        object.__setattr__(self, "gammas", g)
        ids = np.arange(X.shape[0]) if self.point_ids is None else np.asarray(self.point_ids)
        object.__setattr__(self, "point_ids", ids)

    @property
    def n(self):
        return self.blocks.shape[0]

    @property
    def d(self):
        return self.blocks.shape[1]

    @property
    def p(self):
        return self.blocks.shape[2]

    def rotated(self, rotations) -> "ProjectedDesign":
        """Design for bases ``T_i Gamma_i``: each ``X_i`` becomes ``Gamma_i^T X_i``."""
        R = np.asarray(rotations)
        return ProjectedDesign(np.einsum("ikl,ikj->ilj", R, self.blocks), self.gammas, self.point_ids)

    def subset_functions(self, columns) -> "ProjectedDesign":
        columns = list(columns)
        return ProjectedDesign(self.blocks[:, :, columns], self.gammas[columns], self.point_ids)


@dataclass
class CoefficientField:
    """Coefficient blocks ``B[i, j, :]`` (row ``j`` of ``B_i``) at regularization ``lam``."""

    blocks: np.ndarray
    lam: float = 0.0

    @classmethod
    def zeros(cls, design: ProjectedDesign, lam: float = 0.0):
        return cls(np.zeros((design.n, design.p, design.d)), lam)

    def group_norms(self) -> np.ndarray:
        return np.sqrt(np.sum(self.blocks**2, axis=(0, 2)))


@dataclass
class SolveReport:
    objective_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    kkt_residual: float = float("nan")


def _check_shapes(B: CoefficientField, X: ProjectedDesign):
    n, d, p = X.blocks.shape
    if B.blocks.shape != (n, p, d):
        raise ShapeError(f"coefficients have shape {B.blocks.shape}, expected {(n, p, d)}")


def penalty_scale(X: ProjectedDesign, lam: float) -> float:
    return lam / math.sqrt(X.d * X.n)


def residuals(B: CoefficientField, X: ProjectedDesign) -> np.ndarray:
    return np.eye(X.d) - np.einsum("ikj,ijl->ikl", X.blocks, B.blocks)


def objective(B: CoefficientField, X: ProjectedDesign, lam: float) -> float:
    _check_shapes(B, X)
    R = residuals(B, X)
    return float(0.5 * np.sum(R**2) + penalty_scale(X, lam) * np.sum(B.group_norms()))


def group_gradients(B: CoefficientField, X: ProjectedDesign) -> np.ndarray:
    """Negative loss gradient per group, ``G[i, j, :] = R_i^T x_ij``; shape ``(n', p, d)``."""
    R = residuals(B, X)
    return np.einsum("ikl,ikj->ijl", R, X.blocks)


def lambda_zero(X: ProjectedDesign) -> float:
    """Smallest ``lam`` for which ``B = 0`` is optimal."""
    col_norms = np.sqrt(np.sum(X.blocks**2, axis=(0, 1)))
    return float(math.sqrt(X.d * X.n) * col_norms.max())


def kkt_check(B: CoefficientField, X: ProjectedDesign, lam: float, tol: float):
    """Stationarity residual of the optimality conditions.

    Active groups need ``g_j = alpha B_.j / ||B_.j||``; zero groups need
    ``||g_j|| <= alpha``, with ``alpha = lam / sqrt(d n')``. Returns
    ``(passed, worst_violation)``.
    """
    _check_shapes(B, X)
    alpha = penalty_scale(X, lam)
    G = group_gradients(B, X)
    norms = B.group_norms()
    worst = 0.0
    for j in range(X.p):
        g = G[:, j, :]
        if norms[j] > 0:
            viol = np.linalg.norm(g - alpha * B.blocks[:, j, :] / norms[j])
        else:
            viol = max(0.0, np.linalg.norm(g) - alpha)
        worst = max(worst, float(viol))
    return worst <= tol, worst


def _group_update(g: np.ndarray, c: np.ndarray, alpha: float) -> np.ndarray:
    """Exact minimizer of ``sum_i (c_i/2 ||b_i||^2 - g_i.b_i) + alpha ||b||``.

    ``g`` has shape ``(n', d)``, ``c`` shape ``(n',)`` with ``g_i = 0``
    wherever ``c_i = 0``. The nonzero solution is ``b_i = s g_i / (c_i s +
    alpha)`` where ``s = ||b||`` is the root of the secular equation
    ``sum_i ||g_i||^2 / (c_i s + alpha)^2 = 1``.
    """
    gnorm = math.sqrt(float(np.sum(g * g)))
    if gnorm <= alpha:
        return np.zeros_like(g)
    safe_c = np.where(c > 0, c, 1.0)
    if alpha == 0.0:
        return np.where(c[:, None] > 0, g / safe_c[:, None], 0.0)
    a = np.sum(g * g, axis=1)
    live = c > 0
    cmin, cmax = c[live].min(), c[live].max()
    if cmax - cmin <= 1e-14 * cmax:
        s = (gnorm - alpha) / cmax
    else:
        s_hi = math.sqrt(float(np.sum(a[live] / c[live] ** 2)))

        def secular(s):
            return float(np.sum(a / (c * s + alpha) ** 2)) - 1.0

        s = brentq(secular, 0.0, s_hi, xtol=1e-15 * max(s_hi, 1.0), rtol=4 * np.finfo(float).eps)
    return g * (s / (c * s + alpha))[:, None]


def _anderson(history):
    """Extrapolate from the last iterates (Anderson mixing with coefficients summing to 1)."""
    W = np.stack([h.ravel() for h in history])
    U = np.diff(W, axis=0)
    K = U @ U.T
    try:
        z = np.linalg.solve(K + 1e-12 * np.trace(K) * np.eye(K.shape[0]), np.ones(K.shape[0]))
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(z)) or z.sum() == 0:
        return None
    c = z / z.sum()
    return (c @ W[1:]).reshape(history[0].shape)


def solve(X: ProjectedDesign, lam: float, tol: float = 1e-8, max_iter: int = 5000,
          warm_start: Optional[CoefficientField] = None, raise_on_failure: bool = True,
          anderson: int = 5):
    """Cyclic block coordinate descent over function groups.

    Each sweep minimizes the objective exactly over one group at a time, in
    index order. Every ``anderson`` sweeps an extrapolated point is tried and
    kept only if it lowers the objective, which rescues the slow zig-zag
    between nearly colinear groups. Stops once the largest group change in a
    sweep falls below ``tol`` and the optimality residual is within ``tol``.

    Returns
    -------
    coef : CoefficientField
    report : SolveReport

    Raises
    ------
    NotConverged
        After ``max_iter`` sweeps, carrying the partial result, unless
        ``raise_on_failure`` is False.
    """
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    n, d, p = X.blocks.shape
    alpha = penalty_scale(X, lam)
    B = np.zeros((n, p, d)) if warm_start is None else np.array(warm_start.blocks, dtype=np.float64)
    coef = CoefficientField(B, lam)
    _check_shapes(coef, X)
    Xb = X.blocks
    c_all = np.sum(Xb**2, axis=1)  # (n, p)
    R = residuals(coef, X)
    report = SolveReport()
    report.objective_trace.append(objective(coef, X, lam))

    if lam >= lambda_zero(X) * (1 + 1e-12) and warm_start is None:
        report.converged = True
        report.kkt_residual = kkt_check(coef, X, lam, tol)[1]
        return coef, report

    history = []
    for it in range(1, max_iter + 1):
        max_delta = 0.0
        for j in range(p):
            xj = Xb[:, :, j]
            bj = B[:, j, :]
            c = c_all[:, j]
            g = np.einsum("ikl,ik->il", R, xj) + c[:, None] * bj
            new = _group_update(g, c, alpha)
            diff = new - bj
            delta = math.sqrt(float(np.sum(diff * diff)))
            if delta > 0.0:
                R -= xj[:, :, None] * diff[:, None, :]
                B[:, j, :] = new
            max_delta = max(max_delta, delta)
        report.iterations = it
        current = 0.5 * float(np.sum(R**2)) + alpha * float(np.sum(coef.group_norms()))
        if anderson:
            history.append(B.copy())
            if len(history) == anderson + 1:
                extra = _anderson(history)
                history = []
                if extra is not None:
                    trial = CoefficientField(extra, lam)
                    value = objective(trial, X, lam)
                    if value < current:
                        B[...] = extra
                        R = residuals(coef, X)
                        current = value
        report.objective_trace.append(current)
        if max_delta < tol:
            # recompute residuals from scratch to shed accumulated round-off
            R = residuals(coef, X)
            ok, worst = kkt_check(coef, X, lam, tol)
            report.kkt_residual = worst
            if ok:
                report.converged = True
                return coef, report
    report.kkt_residual = kkt_check(coef, X, lam, tol)[1]
    if raise_on_failure:
        raise NotConverged(f"no convergence in {max_iter} sweeps (kkt residual {report.kkt_residual:.3g})",
                           coef=coef, report=report)
    return coef, report


def support(B: CoefficientField, zero_tol: float = ZERO_TOL) -> tuple:
    """Indices of groups with norm above ``zero_tol``, ascending."""
    return tuple(int(j) for j in np.flatnonzero(B.group_norms() > zero_tol))


@dataclass
class PathPoint:
    lam: float
    support: tuple
    group_norms: np.ndarray


@dataclass
class PathResult:
    lambda_star: float
    support: tuple
    path: list
    coef: Optional[CoefficientField] = None
    flagged: bool = False
    lambda_zero: float = float("nan")


def path_search(X: ProjectedDesign, d_target: int, tol: float = 1e-8, max_iter: int = 5000,
                xtol: float = 1e-4, max_probes: int = 60, warm_start: bool = True,
                raise_unreachable: bool = False) -> PathResult:
    """Bisect ``lam`` in ``[0, lambda_zero]`` for the largest value with ``|S| = d_target``.

    Each solve is warm-started from the previous probe. When no probe hits
    ``d_target`` exactly the probe with the smallest support of size at least
    ``d_target`` is returned with ``flagged=True``.
    """
    if not 1 <= d_target <= X.p:
        raise ValueError(f"d_target must lie in [1, {X.p}], got {d_target}")
    lam0 = lambda_zero(X)
    path = []
    if lam0 == 0.0:
        res = PathResult(0.0, (), path, CoefficientField.zeros(X), flagged=True, lambda_zero=lam0)
        if raise_unreachable:
            raise UnreachableSupport("design is identically zero")
        return res

    lo, hi = 0.0, lam0
    best = None
    prev = None
    results = {}
    for _ in range(max_probes):
        lam = 0.5 * (lo + hi)
        coef, _ = solve(X, lam, tol=tol, max_iter=max_iter,
                        warm_start=prev if warm_start else None, raise_on_failure=False)
        prev = coef
        S = support(coef)
        path.append(PathPoint(lam, S, coef.group_norms()))
        results[lam] = coef
        logger.debug("probe lam=%.6g |S|=%d", lam, len(S))
        if len(S) == d_target:
            if best is None or lam > best:
                best = lam
            lo = lam
        elif len(S) > d_target:
            lo = lam
        else:
            hi = lam
        if hi - lo <= xtol * lam0:
            break

    if best is not None:
        pt = next(pp for pp in path if pp.lam == best)
        return PathResult(best, pt.support, path, results[best], flagged=False, lambda_zero=lam0)

    candidates = [pp for pp in path if len(pp.support) >= d_target]
    if not candidates:
        candidates = path
    pt = min(candidates, key=lambda pp: (len(pp.support), -pp.lam))
    logger.warning("no probe reached |S| = %d; returning |S| = %d at lam=%.6g",
                   d_target, len(pt.support), pt.lam)
    if raise_unreachable:
        raise UnreachableSupport(f"support size {d_target} not reached; closest {len(pt.support)}")
    return PathResult(pt.lam, pt.support, path, results[pt.lam], flagged=True, lambda_zero=lam0)


def last_surviving(X: ProjectedDesign, d_target: int, n_grid: int = 60, min_ratio: float = 1e-3,
                   tol: float = 1e-8, max_iter: int = 5000) -> PathResult:
    """Select the ``d_target`` groups that stay nonzero up to the largest ``lam``.

    Traces a geometric grid from ``lambda_zero`` down to ``min_ratio *
    lambda_zero`` with warm starts. Ties go to the larger group norm, then to
    the smaller index.
    """
    if not 1 <= d_target <= X.p:
        raise ValueError(f"d_target must lie in [1, {X.p}], got {d_target}")
    lam0 = lambda_zero(X)
    path = []
    if lam0 == 0.0:
        return PathResult(0.0, (), path, CoefficientField.zeros(X), flagged=True, lambda_zero=lam0)
    grid = lam0 * np.geomspace(1.0, min_ratio, n_grid)[1:]
    last_alive = np.full(X.p, -np.inf)
    norm_at = np.zeros(X.p)
    prev = None
    coefs = []
    for lam in grid:
        coef, _ = solve(X, float(lam), tol=tol, max_iter=max_iter, warm_start=prev, raise_on_failure=False)
        prev = coef
        norms = coef.group_norms()
        S = support(coef)
        path.append(PathPoint(float(lam), S, norms))
        coefs.append(coef)
        for j in S:
            if last_alive[j] == -np.inf:
                last_alive[j] = lam
                norm_at[j] = norms[j]
        if np.sum(np.isfinite(last_alive)) >= d_target and len(S) > d_target:
            break
    order = sorted(range(X.p), key=lambda j: (-last_alive[j], -norm_at[j], j))
    chosen = tuple(sorted(order[:d_target]))
    flagged = not np.all(np.isfinite(last_alive[list(chosen)]))
    lam_star = float(min(last_alive[list(chosen)])) if not flagged else float(grid[-1])
    k = next((k for k, pp in enumerate(path) if pp.lam == lam_star), len(path) - 1)
    return PathResult(lam_star, chosen, path, coefs[k], flagged=flagged, lambda_zero=lam0)


def write_path_csv(path, fh_or_path) -> None:
    """Regularization path as rows ``lambda, group_index, group_norm``."""
    def _write(fh):
        w = csv.writer(fh)
        w.writerow(["lambda", "group_index", "group_norm"])
        for pp in sorted(path, key=lambda q: q.lam):
            for j, v in enumerate(pp.group_norms):
                w.writerow([repr(float(pp.lam)), j, repr(float(v))])

    if hasattr(fh_or_path, "write"):
        _write(fh_or_path)
    else:
        with open(fh_or_path, "w", newline="") as fh:
            _write(fh)


def trace_path(X: ProjectedDesign, n_grid: int = 50, min_ratio: float = 1e-3,
               tol: float = 1e-8, max_iter: int = 5000) -> list:
    """Warm-started solutions on a geometric grid from ``lambda_zero`` down."""
    lam0 = lambda_zero(X)
    path = []
    prev = None
    for lam in lam0 * np.geomspace(1.0, min_ratio, n_grid):
        coef, _ = solve(X, float(lam), tol=tol, max_iter=max_iter, warm_start=prev, raise_on_failure=False)
        prev = coef
        path.append(PathPoint(float(lam), support(coef), coef.group_norms()))
    return path
