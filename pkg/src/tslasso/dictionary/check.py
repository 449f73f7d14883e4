"""Finite-difference validation of analytic dictionary gradients."""

from __future__ import annotations

import numpy as np

from .base import finite_difference_error, wrapped_difference
from .molecular import MolecularDictionary, pushforward_matrix


def sample_points(dictionary, cloud, n_points: int = 100, seed: int = 0, jitter: float = 0.05):
    """Points at which to test ``dictionary``: rows of the cloud, or jittered configurations.

    Configurations get i.i.d. Gaussian jitter of size ``jitter`` so the check
    also covers geometries off the sampled manifold.
    """
    rng = np.random.default_rng(seed)
    rows = rng.choice(cloud.n, size=min(n_points, cloud.n), replace=False)
    if isinstance(dictionary, MolecularDictionary):
        base = cloud.configs[rows]
        return base + jitter * rng.standard_normal(base.shape)
    return cloud.points[rows]


def gradient_errors(dictionary, points, h: float = 1e-5) -> np.ndarray:
    """Max relative finite-difference error per function over ``points``."""
    period = 2 * np.pi if isinstance(dictionary, MolecularDictionary) else None
    worst = np.zeros(dictionary.p)
    for x in points:
        for j, fn in enumerate(dictionary.functions):
            worst[j] = max(worst[j], finite_difference_error(fn, x, h=h, period=period))
    return worst


def pushforward_errors(dictionary: MolecularDictionary, configs, h: float = 1e-5, floor: float = 1e-3,
                       seed: int = 0) -> np.ndarray:
    """Directional check of pushed-forward gradients along random straight curves.

    For ``c(t) = x + t w`` compares ``d/dt f(c(t))`` with
    ``<grad_xi f, d/dt fmap(c(t))>``, both by central differences except the
    analytic pushforward. Values are treated as angles. Returns the max
    relative error per function.
    """
    rng = np.random.default_rng(seed)
    fmap = dictionary.fmap
    worst = np.zeros(dictionary.p)
    for x in configs:
        w = rng.standard_normal(x.shape)
        dxi = (fmap.transform(x + h * w) - fmap.transform(x - h * w)) / (2 * h)
        P = pushforward_matrix(x, fmap)
        for j, fn in enumerate(dictionary.functions):
            df = wrapped_difference(fn.value(x + h * w), fn.value(x - h * w), 2 * np.pi) / (2 * h)
            g = P @ np.asarray(fn.gradient(x)).ravel()
            worst[j] = max(worst[j], abs(g @ dxi.ravel() - df) / max(abs(df), floor))
    return worst
