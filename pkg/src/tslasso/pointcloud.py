"""Sampled point clouds, radius neighborhoods and compact-support kernels."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .exceptions import FormatError

KERNELS = ("constant", "epanechnikov", "gaussian")

_RAW_HEADER = struct.Struct("<QQ")


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PointCloud:
    """``n x D`` sample matrix with optional per-point metadata.

    Parameters
    ----------
    points : array of shape (n, D)
        Sample coordinates in the ambient space. Stored read-only.
    intrinsic : array of shape (n, k), optional
        Ground-truth intrinsic coordinates, when known.
    configs : array of shape (n, n_atoms, 3), optional
        Atomic configurations paired with each row (molecular data).
    """

    points: np.ndarray
    intrinsic: Optional[np.ndarray] = None
    configs: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise FormatError(f"points must be a non-empty 2-d array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise FormatError("points contain NaN or Inf")
        object.__setattr__(self, "points", _frozen(pts))
        for name in ("intrinsic", "configs"):
            value = getattr(self, name)
            if value is not None:
                value = _frozen(value)
                if value.shape[0] != pts.shape[0]:
                    raise FormatError(f"{name} has {value.shape[0]} rows, expected {pts.shape[0]}")
                object.__setattr__(self, name, value)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def D(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class NeighborSet:
    center: int
    members: np.ndarray
    distances: np.ndarray

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel ``K(u)`` truncated to ``u <= 1`` with bandwidth ``epsilon``."""

    kind: str = "gaussian"
    bandwidth: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ValueError(f"unknown kernel {self.kind!r}; expected one of {KERNELS}")
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")

    def __call__(self, u):
        u = np.asarray(u, dtype=np.float64)
        inside = u <= 1.0
        if self.kind == "gaussian":
            k = np.exp(-(u**2))
        elif self.kind == "epanechnikov":
            k = 1.0 - u**2
        else:
            k = np.ones_like(u)
        return np.where(inside, k, 0.0)


def kernel_weights(distances, spec: KernelSpec) -> np.ndarray:
    """Weights ``K(dist / epsilon)`` for a list of neighbor distances."""
    distances = np.asarray(distances, dtype=np.float64)
    return spec(distances / spec.bandwidth)


def radius_neighbors(cloud: PointCloud, center: int, radius: float) -> NeighborSet:
    """All indices within Euclidean distance ``radius`` of ``cloud.points[center]``.

    Brute-force scan; members are sorted ascending and include ``center``.
    """
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if not 0 <= center < cloud.n:
        raise IndexError(f"center {center} out of range for {cloud.n} points")
    dist = np.sqrt(np.sum((cloud.points - cloud.points[center]) ** 2, axis=1))
    members = np.flatnonzero(dist <= radius)
    return NeighborSet(center=int(center), members=members, distances=dist[members])


def load_matrix(path, format: str = "csv", header: bool = False) -> PointCloud:
    """Read a point cloud from ``csv`` or ``raw`` (little-endian f64) files.

    The raw layout is a 16-byte header of two unsigned 64-bit integers
    ``(n, D)`` followed by ``n * D`` row-major doubles.
    """
    return PointCloud(read_array(path, format=format, header=header))


def read_array(path, format: str = "csv", header: bool = False) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    if format in ("raw", "raw-binary-f64", "bin"):
        return _read_raw(path)
    if format != "csv":
        raise ValueError(f"unknown format {format!r}")
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        if header:
            next(reader, None)
        for lineno, row in enumerate(reader, start=2 if header else 1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                values = [float(c) for c in row]
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-numeric value in {row}") from None
            if rows and len(values) != len(rows[0]):
                raise FormatError(f"{path}:{lineno}: expected {len(rows[0])} columns, got {len(values)}")
            rows.append(values)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    arr = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{path}: NaN or Inf in data")
    return arr


def _read_raw(path: Path) -> np.ndarray:
    blob = path.read_bytes()
    if len(blob) < _RAW_HEADER.size:
        raise FormatError(f"{path}: truncated header")
    n, D = _RAW_HEADER.unpack_from(blob)
    expected = _RAW_HEADER.size + 8 * n * D
    if len(blob) != expected:
        raise FormatError(f"{path}: expected {expected} bytes for {n}x{D}, got {len(blob)}")
    arr = np.frombuffer(blob, dtype="<f8", offset=_RAW_HEADER.size).reshape(n, D).astype(np.float64)
    if n == 0 or D == 0:
        raise FormatError(f"{path}: empty matrix")
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{path}: NaN or Inf in data")
    return arr


def write_matrix(path, matrix, format: str = "raw") -> None:
    """Inverse of :func:`read_array`. CSV uses ``repr`` floats so it round-trips."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    path = Path(path)
    if format in ("raw", "raw-binary-f64", "bin"):
        n, D = matrix.shape
        with open(path, "wb") as fh:
            fh.write(_RAW_HEADER.pack(n, D))
            fh.write(np.ascontiguousarray(matrix, dtype="<f8").tobytes())
    elif format == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in matrix:
                writer.writerow([repr(float(v)) for v in row])
    else:
        raise ValueError(f"unknown format {format!r}")
