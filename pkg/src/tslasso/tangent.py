"""Weighted local PCA estimates of tangent-space bases."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import DegenerateWeights, RankDeficient
from .pointcloud import KernelSpec, PointCloud, kernel_weights, radius_neighbors

RANK_RTOL = 1e-12


@dataclass(frozen=True)
class TangentFrame:
    """Orthonormal ``D x d`` basis of an estimated tangent space.

    ``singular_values`` are the top ``d`` singular values of the weighted,
    centered neighborhood matrix (their squares are the covariance
    eigenvalues). ``spectral_gap`` is ``s[d-1] - s[d]`` (``s[d-1]`` when the
    neighborhood has only ``d`` directions).
    """

    center: int
    basis: np.ndarray
    singular_values: np.ndarray
    spectral_gap: float = float("nan")
    n_neighbors: int = 0

    @property
    def eigenvalues(self):
        return self.singular_values**2

    @property
    def projector(self):
        return self.basis @ self.basis.T


def weighted_mean(local_points, weights) -> np.ndarray:
    local_points = np.asarray(local_points, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    total = weights.sum()
    if not total > 0:
        raise DegenerateWeights("kernel weights sum to zero")
    return weights @ local_points / total


def _fix_signs(basis):
    # largest-magnitude entry of each column made positive
    idx = np.argmax(np.abs(basis), axis=0)
    signs = np.sign(basis[idx, np.arange(basis.shape[1])])
    signs[signs == 0] = 1.0
    return basis * signs


def tangent_space_basis(local_points, d: int, spec: KernelSpec, center, center_index: int = -1,
                        distances=None) -> TangentFrame:
    """Weighted local PCA around ``center``.

    Parameters
    ----------
    local_points : array of shape (k, D)
        Neighborhood of the center (the center itself included).
    d : int
        Intrinsic dimension.
    spec : KernelSpec
        Kernel applied to ``||x - center|| / bandwidth``.
    center : array of shape (D,)
        Point whose tangent space is estimated.
    distances : array of shape (k,), optional
        Precomputed distances to ``center``.
    """
    local_points = np.asarray(local_points, dtype=np.float64)
    center = np.asarray(center, dtype=np.float64)
    k, D = local_points.shape
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if k < d:
        raise RankDeficient(f"{k} neighbors cannot span {d} dimensions",
                            points=[center_index] if center_index >= 0 else None)
    if distances is None:
        distances = np.linalg.norm(local_points - center, axis=1)
    w = kernel_weights(distances, spec)
    mean = weighted_mean(local_points, w)
    Z = np.sqrt(w)[:, None] * (local_points - mean)
    _, s, vt = np.linalg.svd(Z, full_matrices=False)
    if s.size < d or s[0] == 0 or s[d - 1] <= RANK_RTOL * s[0]:
        raise RankDeficient(
            f"weighted neighborhood has rank < {d} (singular values {s[:d + 1]})",
            points=[center_index] if center_index >= 0 else None,
        )
    basis = _fix_signs(vt[:d].T)
    gap = s[d - 1] - s[d] if s.size > d else s[d - 1]
    return TangentFrame(center=center_index, basis=basis, singular_values=s[:d].copy(),
                        spectral_gap=float(gap), n_neighbors=k)


def estimate_tangent_frames(cloud: PointCloud, indices, d: int, radius: float,
                            spec: Optional[KernelSpec] = None) -> list[TangentFrame]:
    """Tangent frame at each ``indices`` point, with neighborhoods from the full cloud."""
    spec = spec or KernelSpec("gaussian", radius)
    frames = []
    for i in indices:
        nb = radius_neighbors(cloud, int(i), radius)
        frames.append(tangent_space_basis(cloud.points[nb.members], d, spec, cloud.points[i],
                                          center_index=int(i), distances=nb.distances))
    return frames


def projector_error(basis, reference) -> float:
    """Spectral-norm distance between the projectors onto two subspaces.

    Equals the sine of the largest principal angle for equal dimensions.
    """
    basis = np.asarray(basis, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if reference.ndim == 1:
        reference = reference[:, None]
    q, _ = np.linalg.qr(reference)
    return float(np.linalg.norm(basis @ basis.T - q @ q.T, ord=2))
