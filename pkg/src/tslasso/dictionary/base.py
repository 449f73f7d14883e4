"""Dictionaries of scalar functions on the ambient space with analytic gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..exceptions import ConfigError


@dataclass(frozen=True)
class DictFunction:
    """Named scalar function with an analytic gradient.

    ``value`` maps a point to a float and ``gradient`` maps it to an array of
    the same length.
    """

    name: str
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x):
        return self.value(x)

    def scaled(self, factor: float) -> "DictFunction":
        return DictFunction(
            self.name,
            lambda x: factor * self.value(x),
            lambda x: factor * np.asarray(self.gradient(x)),
        )


class Dictionary:
    """Ordered collection of :class:`DictFunction` evaluated on ambient points."""

    def __init__(self, functions: Sequence[DictFunction]):
        functions = list(functions)
        if not functions:
            raise ConfigError("dictionary must contain at least one function")
        names = [f.name for f in functions]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ConfigError(f"duplicate dictionary function names: {dupes}")
        self.functions = tuple(functions)

    @property
    def p(self) -> int:
        return len(self.functions)

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.functions]

    def __len__(self):
        return self.p

    def __iter__(self):
        return iter(self.functions)

    def __getitem__(self, j):
        return self.functions[j]

    def values(self, cloud, indices=None) -> np.ndarray:
        """Function values, shape ``(len(indices), p)``."""
        indices = range(cloud.n) if indices is None else indices
        return np.array([[f.value(cloud.points[i]) for f in self.functions] for i in indices])

    def gradients(self, cloud, indices=None) -> np.ndarray:
        """Ambient gradients at the selected rows, shape ``(len(indices), p, D)``."""
        indices = range(cloud.n) if indices is None else indices
        return np.array([[f.gradient(cloud.points[i]) for f in self.functions] for i in indices],
                        dtype=np.float64).reshape(len(indices), self.p, cloud.D)

    def subset(self, indices) -> "Dictionary":
        return Dictionary([self.functions[j] for j in indices])


def coordinate_function(j: int, D: int | None = None, name: str | None = None) -> DictFunction:
    """``f(x) = x[j]`` with gradient ``e_j``."""
    if j < 0 or (D is not None and j >= D):
        raise IndexError(f"coordinate index {j} out of range for D={D}")

    def grad(x):
        g = np.zeros(np.shape(x)[-1])
        if j >= g.size:
            raise IndexError(f"coordinate index {j} out of range for D={g.size}")
        g[j] = 1.0
        return g

    return DictFunction(name or f"x{j}", lambda x: float(np.asarray(x)[j]), grad)


def coordinate_dictionary(D: int) -> Dictionary:
    return Dictionary([coordinate_function(j, D) for j in range(D)])


def swissroll_intrinsics(rotation=None) -> tuple[DictFunction, DictFunction]:
    """Roll parameter and height of a rotated swiss roll as ambient functions.

    Points are ``rotation @ (t cos t, h, t sin t, 0, ..., 0)``. The roll
    parameter is the unwrapped polar angle of the first and third unrotated
    coordinates; the winding number is read off the radius, which equals
    ``t`` on the surface, so the gradient is that of ``atan2``.
    """
    if rotation is None:
        raise ConfigError("swiss roll intrinsics need the generator's rotation matrix")
    Q = np.asarray(rotation, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] < 3:
        raise ConfigError(f"rotation must be a square matrix of size >= 3, got {Q.shape}")
    qx, qh, qz = Q[:, 0].copy(), Q[:, 1].copy(), Q[:, 2].copy()

    def roll_value(xi):
        xi = np.asarray(xi, dtype=np.float64)
        x, z = qx @ xi, qz @ xi
        theta = np.arctan2(z, x)
        k = np.round((np.hypot(x, z) - theta) / (2 * np.pi))
        return float(theta + 2 * np.pi * k)

    def roll_gradient(xi):
        xi = np.asarray(xi, dtype=np.float64)
        x, z = qx @ xi, qz @ xi
        r2 = x * x + z * z
        return (x * qz - z * qx) / r2

    g1 = DictFunction("g1", roll_value, roll_gradient)
    g2 = DictFunction("g2", lambda xi: float(qh @ np.asarray(xi, dtype=np.float64)),
                      lambda xi: qh.copy())
    return g1, g2


def wrapped_difference(a, b, period=None):
    """``a - b``, reduced to ``[-period/2, period/2)`` for periodic (angular) values."""
    diff = a - b
    if period:
        diff = (diff + 0.5 * period) % period - 0.5 * period
    return diff


def finite_difference_error(fn: DictFunction, x, h: float = 1e-5, floor: float = 1e-3,
                            period: float | None = None) -> float:
    """Relative error of the analytic gradient against central differences.

    The denominator is ``max(||grad||, floor)`` so points with tiny gradients
    are judged on absolute error. Angular functions pass ``period=2*pi`` so
    steps across the branch cut are unwrapped.
    """
    x = np.asarray(x, dtype=np.float64)
    flat = x.ravel()
    fd = np.empty(flat.size)
    for k in range(flat.size):
        e = np.zeros_like(flat)
        e[k] = h
        fd[k] = wrapped_difference(fn.value((flat + e).reshape(x.shape)),
                                   fn.value((flat - e).reshape(x.shape)), period) / (2 * h)
    g = np.asarray(fn.gradient(x), dtype=np.float64).ravel()
    return float(np.linalg.norm(g - fd) / max(np.linalg.norm(g), floor))
