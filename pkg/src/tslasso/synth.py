"""Seeded synthetic datasets with ground truth: rotated swiss roll and rigid ethanol."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dictionary import Dictionary, coordinate_function, swissroll_intrinsics
from .dictionary.molecular import (
    FeaturizationMap,
    MolecularDictionary,
    fit_featurization,
    featurize_planar_angles,
    torsion_dictionary,
)
from .exceptions import ConfigError, GeometryError
from .pointcloud import PointCloud


@dataclass(frozen=True)
class SwissRollSpec:
    n: int = 2000
    ambient_dim: int = 49
    seed: int = 0
    t_range: tuple = (1.5 * math.pi, 4.5 * math.pi)
    h_range: tuple = (0.0, 20.0)
    rotate: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"n must be positive, got {self.n}")
        if self.ambient_dim < 3:
            raise ConfigError(f"ambient_dim must be >= 3, got {self.ambient_dim}")


@dataclass
class SwissRollData:
    cloud: PointCloud
    truth: np.ndarray
    rotation: np.ndarray
    dictionary: Dictionary
    spec: SwissRollSpec


def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix: QR of a Gaussian matrix, signs fixed by ``diag(R)``."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def swiss_roll(spec: SwissRollSpec = SwissRollSpec()) -> SwissRollData:
    """Roll ``(t cos t, h, t sin t)`` embedded in ``ambient_dim`` by a random rotation.

    The dictionary holds the roll parameter ``g1``, the height ``g2`` and the
    ``ambient_dim`` coordinate functions.
    """
    rng = np.random.default_rng(spec.seed)
    t = rng.uniform(*spec.t_range, size=spec.n)
    h = rng.uniform(*spec.h_range, size=spec.n)
    u = np.zeros((spec.n, spec.ambient_dim))
    u[:, 0] = t * np.cos(t)
    u[:, 1] = h
    u[:, 2] = t * np.sin(t)
    Q = random_rotation(spec.ambient_dim, rng) if spec.rotate else np.eye(spec.ambient_dim)
    points = u @ Q.T
    truth = np.column_stack([t, h])
    g1, g2 = swissroll_intrinsics(Q)
    funcs = [g1, g2] + [coordinate_function(j, spec.ambient_dim) for j in range(spec.ambient_dim)]
    cloud = PointCloud(points, intrinsic=truth, meta={"generator": "swiss-roll"})
    return SwissRollData(cloud, truth, Q, Dictionary(funcs), spec)


# ------------------------------------------------------------------ ethanol

ETHANOL_LABELS = ("C", "C", "O", "H", "H", "H", "H", "H", "H")
ETHANOL_BONDS = ((0, 1), (1, 2), (0, 3), (0, 4), (0, 5), (1, 6), (1, 7), (2, 8))
# torsions whose values are the two sampled degrees of freedom
ETHANOL_G1 = (3, 0, 1, 2)
ETHANOL_G2 = (0, 1, 2, 8)

_CC, _CO, _CH, _OH = 1.54, 1.43, 1.09, 0.96
_TETRA = math.acos(-1.0 / 3.0)


def place_atom(a, b, c, bond, angle, torsion):
    """Position ``d`` with ``|cd| = bond``, angle ``bcd = angle`` and dihedral ``abcd = torsion``.

    Vectorized over a leading axis of ``torsion``.
    """
    bc = c - b
    bc = bc / np.linalg.norm(bc)
    nrm = np.cross(b - a, bc)
    nrm = nrm / np.linalg.norm(nrm)
    m = np.cross(nrm, bc)
    torsion = np.asarray(torsion, dtype=np.float64)
    local = np.stack([
        np.full_like(torsion, -bond * math.cos(angle)),
        bond * math.sin(angle) * np.cos(torsion),
        bond * math.sin(angle) * np.sin(torsion),
    ], axis=-1)
    return c + local @ np.stack([bc, m, nrm])


def ethanol_configs(g1, g2) -> np.ndarray:
    """Rigid ethanol with methyl torsion ``g1`` and hydroxyl torsion ``g2``; shape ``(n, 9, 3)``."""
    g1 = np.atleast_1d(np.asarray(g1, dtype=np.float64))
    g2 = np.atleast_1d(np.asarray(g2, dtype=np.float64))
    n = g1.shape[0]
    c1 = np.zeros(3)
    c2 = np.array([_CC, 0.0, 0.0])
    dummy = np.array([-0.5, 1.0, 0.0])
    o = place_atom(dummy, c1, c2, _CO, _TETRA, np.pi)
    h4 = place_atom(dummy, c1, c2, _CH, _TETRA, np.pi / 3)
    h5 = place_atom(dummy, c1, c2, _CH, _TETRA, -np.pi / 3)
    out = np.empty((n, 9, 3))
    out[:, 0], out[:, 1], out[:, 2] = c1, c2, o
    for k, shift in enumerate((0.0, 2 * np.pi / 3, 4 * np.pi / 3)):
        out[:, 3 + k] = place_atom(o, c2, c1, _CH, _TETRA, g1 + shift)
    out[:, 6], out[:, 7] = h4, h5
    out[:, 8] = place_atom(c1, c2, o, _OH, _TETRA, g2)
    return out


@dataclass(frozen=True)
class RigidEthanolSpec:
    n: int = 2000
    sigma: float = 0.0
    seed: int = 0
    grid: str = "uniform-grid"
    D: int = 50
    noise_space: str = "atoms"
    freeze_g2: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"n must be positive, got {self.n}")
        if self.sigma < 0:
            raise ConfigError(f"sigma must be non-negative, got {self.sigma}")
        if self.grid not in ("uniform-grid", "uniform-random"):
            raise ConfigError(f"unknown grid {self.grid!r}")
        if self.noise_space not in ("atoms", "features"):
            raise ConfigError(f"unknown noise_space {self.noise_space!r}")


@dataclass
class RigidEthanolData:
    configs: np.ndarray
    cloud: PointCloud
    truth: np.ndarray
    fmap: FeaturizationMap
    dictionary: MolecularDictionary
    spec: RigidEthanolSpec
    atom_labels: tuple = ETHANOL_LABELS
    bonds: tuple = ETHANOL_BONDS
    blocks: dict = field(default_factory=dict)


def _torsion_grid(spec: RigidEthanolSpec, rng):
    two_pi = 2 * np.pi
    if spec.freeze_g2:
        g1 = (np.arange(spec.n) / spec.n * two_pi if spec.grid == "uniform-grid"
              else rng.uniform(0, two_pi, spec.n))
        return g1, np.full(spec.n, np.pi)
    if spec.grid == "uniform-random":
        return rng.uniform(0, two_pi, spec.n), rng.uniform(0, two_pi, spec.n)
    m = math.ceil(math.sqrt(spec.n))
    ax = np.arange(m) / m * two_pi
    a, b = np.meshgrid(ax, ax, indexing="ij")
    pick = np.sort(rng.choice(m * m, size=spec.n, replace=False))
    return a.ravel()[pick], b.ravel()[pick]


def rigid_ethanol(spec: RigidEthanolSpec = RigidEthanolSpec()) -> RigidEthanolData:
    """Ethanol with two rigid rotors, planar-angle features projected to ``spec.D``.

    Noise with standard deviation ``sigma`` is added to every atomic
    coordinate (``noise_space="atoms"``) or to the projected features.
    """
    rng = np.random.default_rng(spec.seed)
    g1, g2 = _torsion_grid(spec, rng)
    clean = ethanol_configs(g1, g2)
    configs = clean
    if spec.sigma > 0 and spec.noise_space == "atoms":
        for attempt in range(2):
            configs = clean + spec.sigma * rng.standard_normal(clean.shape)
            try:
                featurize_planar_angles(configs)
                break
            except GeometryError:
                if attempt == 1:
                    raise
    fmap = fit_featurization(configs, spec.D)
    points = fmap.transform(configs)
    if spec.sigma > 0 and spec.noise_space == "features":
        points = points + spec.sigma * rng.standard_normal(points.shape)
    # stored truth is the measured torsion, wrapped into (-pi, pi]
    truth = np.column_stack([np.angle(np.exp(1j * g1)), np.angle(np.exp(1j * g2))])
    truth[truth <= -np.pi] = np.pi
    cloud = PointCloud(points, intrinsic=truth, configs=configs, meta={"generator": "rigid-ethanol"})
    dictionary = torsion_dictionary(ETHANOL_LABELS, ETHANOL_BONDS, fmap)
    blocks = {
        "C-C": [j for j, q in enumerate(dictionary.quadruples) if set(q[1:3]) == {0, 1}],
        "C-O": [j for j, q in enumerate(dictionary.quadruples) if set(q[1:3]) == {1, 2}],
    }
    return RigidEthanolData(configs, cloud, truth, fmap, dictionary, spec, blocks=blocks)


def one_per_block(support, blocks) -> bool:
    """True when ``support`` takes exactly one function from each block."""
    support = set(support)
    return all(len(support & set(b)) == 1 for b in blocks.values()) and \
        len(support) == len(blocks)
