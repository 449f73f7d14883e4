"""Sampled recovery-condition quantities and the dictionary cosine matrix."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import RankDeficient
from .grouplasso import ProjectedDesign

RANK_RTOL = 1e-8


def cosine_matrix(X: ProjectedDesign) -> np.ndarray:
    """Mean over points of ``|cos|`` between projected gradient columns.

    Points where either column vanishes are left out of that pair's mean;
    a pair with no valid point is NaN.
    """
    B = X.blocks
    norms = np.linalg.norm(B, axis=1)  # (n, p)
    gram = np.abs(np.einsum("ikj,ikl->ijl", B, B))
    denom = norms[:, :, None] * norms[:, None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.where(denom > 0, gram / np.where(denom > 0, denom, 1.0), np.nan)
    valid = np.sum(~np.isnan(cos), axis=0)
    mean = np.where(valid > 0, np.nansum(cos, axis=0) / np.maximum(valid, 1), np.nan)
    mean = np.clip(mean, 0.0, 1.0)
    mean = 0.5 * (mean + mean.T)
    diag = np.diag(valid) > 0
    mean[np.diag_indices_from(mean)] = np.where(diag, 1.0, np.nan)
    return mean


@dataclass
class DiagnosticsReport:
    """Sampled incoherence and colinearity quantities for a candidate support.

    ``mu_S`` is 0 by convention when the support is the whole dictionary.
    Condition flags are ``None`` when they cannot be evaluated.
    """

    support: tuple
    cosine_matrix: np.ndarray
    mu_S: float
    nu_S: float
    b_S: float
    phi_S: float
    Gamma: float
    delta: float
    lam: Optional[float] = None
    n_points: int = 0
    condition_flags: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def num(v):
            return None if v is None or (isinstance(v, float) and math.isnan(v)) else float(v)

        return {
            "schema": 1,
            "support": list(self.support),
            "mu_S": num(self.mu_S),
            "nu_S": num(self.nu_S),
            "b_S": num(self.b_S),
            "phi_S": num(self.phi_S),
            "Gamma": num(self.Gamma),
            "delta": num(self.delta),
            "lambda": num(self.lam),
            "n_points": self.n_points,
            "condition_flags": self.condition_flags,
            "notes": self.notes,
            "cosine_matrix": [[num(v) for v in row] for row in self.cosine_matrix],
        }


def sampled_conditions(X: ProjectedDesign, S, grad_norms, lam: Optional[float] = None) -> DiagnosticsReport:
    """Incoherence, internal colinearity, signal strength and gradient bounds of ``S``.

    Parameters
    ----------
    X : ProjectedDesign
        Projected gradients of the (normalized) dictionary.
    S : sequence of int
        Candidate support, of size ``X.d``.
    grad_norms : array of shape (n', p)
        Ambient gradient norms ``||grad f_j(xi_i)||`` of the same functions,
        before projection.
    lam : float, optional
        Regularization value for the signal-strength premise.

    Raises
    ------
    ValueError
        ``len(S) != d`` or invalid indices.
    RankDeficient
        Some ``X_iS`` is numerically singular; ``err.points`` lists them.
    """
    S = tuple(int(j) for j in S)
    n, d, p = X.blocks.shape
    if len(S) != d or len(set(S)) != d or not all(0 <= j < p for j in S):
        raise ValueError(f"support must hold {d} distinct indices in [0, {p}), got {S}")
    G = np.asarray(grad_norms, dtype=np.float64)
    if G.shape != (n, p):
        raise ValueError(f"grad_norms has shape {G.shape}, expected {(n, p)}")
    notes = []
    comp = [j for j in range(p) if j not in S]
    Xs = X.blocks[:, :, list(S)]  # (n, d, d)

    sv = np.linalg.svd(Xs, compute_uv=False)
    bad = np.flatnonzero(sv[:, -1] < RANK_RTOL * sv[:, 0])
    if bad.size:
        raise RankDeficient(f"X_iS is rank deficient at {bad.size} points", points=X.point_ids[bad].tolist())

    if comp:
        inner = np.abs(np.einsum("ikj,ikl->ijl", Xs, X.blocks[:, :, comp]))
        mu = float(np.max(inner / (G[:, list(S), None] * G[:, None, comp])))
    else:
        mu = 0.0
        notes.append("support is the whole dictionary; mu_S = 0 by convention (empty maximum)")

    Xt = Xs / G[:, None, list(S)]
    nu = 0.0
    b = math.inf
    for i in range(n):
        gram_inv = np.linalg.inv(Xt[i].T @ Xt[i])
        nu = max(nu, float(np.linalg.norm(gram_inv - np.diag(G[i, list(S)] ** 2), ord=2)))
        Bstar = np.linalg.inv(Xs[i])  # rows follow S
        b = min(b, float(np.min(np.linalg.norm(Bstar, axis=1))))
    phi = float(np.max(G[:, list(S)]))
    delta = float(np.min(G))
    Gamma = float(np.max(G))
    amp = (1.0 + nu / delta**2) ** 2 if delta > 0 else math.inf
    flags = {"incoherence": bool(amp * mu * phi * Gamma * d < 1.0)}
    flags["signal"] = bool(lam * amp < b * math.sqrt(n) / 2.0) if lam is not None else None
    return DiagnosticsReport(S, cosine_matrix(X), mu, nu, b, phi, Gamma, delta, lam, n, flags, notes)


def write_cosine_csv(matrix, path, names=None) -> None:
    """Square CSV with a header row of function names."""
    matrix = np.asarray(matrix)
    names = names or [str(j) for j in range(matrix.shape[0])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([""] + list(names))
        for name, row in zip(names, matrix):
            w.writerow([name] + ["" if np.isnan(v) else repr(float(v)) for v in row])
