"""Torsion dictionaries, planar-angle featurization and gradient pushforward.

Configurations are ``(n_atoms, 3)`` arrays; dictionary functions on
configuration space accept either that shape or its flattening.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..exceptions import GeometryError, RankDeficient
from .base import DictFunction, Dictionary

DEGENERATE_TOL = 1e-10


@dataclass(frozen=True)
class MolecularConfig:
    positions: np.ndarray
    atom_labels: tuple = ()

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "atom_labels", tuple(self.atom_labels))

    @property
    def n_atoms(self):
        return self.positions.shape[0]


def _as_positions(x):
    if isinstance(x, MolecularConfig):
        return x.positions
    return np.asarray(x, dtype=np.float64).reshape(-1, 3)


# --------------------------------------------------------------------- torsions

def dihedral(a, b, c, d) -> float:
    """IUPAC dihedral of planes (a, b, c) and (b, c, d), in (-pi, pi]."""
    b1, b2, b3 = b - a, c - b, d - c
    n1, n2 = np.cross(b1, b2), np.cross(b2, b3)
    if np.linalg.norm(n1) < DEGENERATE_TOL or np.linalg.norm(n2) < DEGENERATE_TOL:
        raise GeometryError("collinear atoms in torsion")
    phi = np.arctan2(np.linalg.norm(b2) * (b1 @ n2), n1 @ n2)
    return float(np.pi) if phi <= -np.pi else float(phi)


def dihedral_gradient(a, b, c, d) -> np.ndarray:
    """Gradient of :func:`dihedral` w.r.t. the four positions, shape ``(4, 3)``."""
    b1, b2, b3 = b - a, c - b, d - c
    n1, n2 = np.cross(b1, b2), np.cross(b2, b3)
    nn1, nn2 = n1 @ n1, n2 @ n2
    if np.sqrt(nn1) < DEGENERATE_TOL or np.sqrt(nn2) < DEGENERATE_TOL:
        raise GeometryError("collinear atoms in torsion")
    lb2 = np.linalg.norm(b2)
    ga = -lb2 / nn1 * n1
    gd = lb2 / nn2 * n2
    r1 = -(b1 @ b2) / (lb2 * lb2)
    r3 = -(b3 @ b2) / (lb2 * lb2)
    gb = (r1 - 1.0) * ga - r3 * gd
    gc = (r3 - 1.0) * gd - r1 * ga
    return np.stack([ga, gb, gc, gd])


def torsion(quadruple: Sequence[int], name: str | None = None) -> DictFunction:
    """Dihedral angle of four atoms as a function on configuration space."""
    q = tuple(int(k) for k in quadruple)
    if len(q) != 4 or len(set(q)) != 4 or min(q) < 0:
        raise ValueError(f"torsion needs four distinct non-negative atom indices, got {quadruple}")

    def value(x):
        pos = _as_positions(x)
        return dihedral(*pos[list(q)])

    def gradient(x):
        pos = _as_positions(x)
        g = np.zeros_like(pos)
        g[list(q)] = dihedral_gradient(*pos[list(q)])
        return g.ravel()

    return DictFunction(name or "tor_{}_{}_{}_{}".format(*q), value, gradient)


def bond_torsions(atom_labels: Sequence[str], bonds) -> list[tuple[int, int, int, int]]:
    """All torsion 4-tuples ``(x, b1, b2, y)`` along heavy-atom bonds.

    ``x`` ranges over the other neighbors of ``b1`` and ``y`` over the other
    neighbors of ``b2``; one tuple per reversal class, ordered by bond then
    neighbor indices.
    """
    n = len(atom_labels)
    nbrs = {k: set() for k in range(n)}
    edges = []
    for u, v in bonds:
        u, v = int(u), int(v)
        if u == v or not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"invalid bond ({u}, {v})")
        nbrs[u].add(v)
        nbrs[v].add(u)
        edges.append((min(u, v), max(u, v)))
    heavy = [not str(lbl).upper().startswith("H") for lbl in atom_labels]
    out = []
    for b1, b2 in sorted(set(edges)):
        if not (heavy[b1] and heavy[b2]):
            continue
        for x in sorted(nbrs[b1] - {b2}):
            for y in sorted(nbrs[b2] - {b1}):
                if x != y:
                    out.append((x, b1, b2, y))
    return out


# ----------------------------------------------------------- planar angles

def angle_triples(n_atoms: int) -> np.ndarray:
    """``(F, 3)`` index rows ``(vertex, other, other)``: three angles per lexicographic triple."""
    rows = []
    for i, j, k in itertools.combinations(range(n_atoms), 3):
        rows += [(i, j, k), (j, i, k), (k, i, j)]
    return np.array(rows, dtype=np.intp).reshape(-1, 3)


def featurize_planar_angles(config, _triples=None) -> np.ndarray:
    """Interior angles of every atom triple, length ``3 * C(n_atoms, 3)``.

    Accepts one configuration ``(n_atoms, 3)`` or a stack ``(n, n_atoms, 3)``.
    """
    pos = config.positions if isinstance(config, MolecularConfig) else np.asarray(config, dtype=np.float64)
    single = pos.ndim == 2
    if single:
        pos = pos[None]
    tri = angle_triples(pos.shape[1]) if _triples is None else _triples
    u = pos[:, tri[:, 1]] - pos[:, tri[:, 0]]
    v = pos[:, tri[:, 2]] - pos[:, tri[:, 0]]
    lu, lv = np.linalg.norm(u, axis=-1), np.linalg.norm(v, axis=-1)
    if np.any(lu < DEGENERATE_TOL) or np.any(lv < DEGENERATE_TOL):
        raise GeometryError("coincident atoms in configuration")
    ang = np.arctan2(np.linalg.norm(np.cross(u, v), axis=-1), np.einsum("...k,...k->...", u, v))
    return ang[0] if single else ang


def planar_angle_jacobian(config, _triples=None) -> np.ndarray:
    """Analytic Jacobian of :func:`featurize_planar_angles`, shape ``(F, 3 * n_atoms)``."""
    pos = _as_positions(config)
    n_atoms = pos.shape[0]
    tri = angle_triples(n_atoms) if _triples is None else _triples
    u = pos[tri[:, 1]] - pos[tri[:, 0]]
    v = pos[tri[:, 2]] - pos[tri[:, 0]]
    lu = np.linalg.norm(u, axis=1, keepdims=True)
    lv = np.linalg.norm(v, axis=1, keepdims=True)
    if np.any(lu < DEGENERATE_TOL) or np.any(lv < DEGENERATE_TOL):
        raise GeometryError("coincident atoms in configuration")
    uh, vh = u / lu, v / lv
    cos = np.sum(uh * vh, axis=1, keepdims=True)
    pu = vh - cos * uh  # in-plane, perpendicular to u, toward v
    pv = uh - cos * vh
    su = np.linalg.norm(pu, axis=1, keepdims=True)
    sv = np.linalg.norm(pv, axis=1, keepdims=True)
    if np.any(su < DEGENERATE_TOL):
        raise GeometryError("collinear atoms in configuration")
    gu = -pu / (su * lu)
    gv = -pv / (sv * lv)
    F = tri.shape[0]
    J = np.zeros((F, n_atoms, 3))
    rows = np.arange(F)
    # vertex indices within a row are distinct, so plain fancy assignment is safe
    J[rows, tri[:, 1]] = gu
    J[rows, tri[:, 2]] = gv
    J[rows, tri[:, 0]] = -(gu + gv)
    return J.reshape(F, 3 * n_atoms)


@dataclass(frozen=True)
class FeaturizationMap:
    """Centered linear projection of planar-angle features to ``D`` coordinates."""

    projection: np.ndarray
    mean: np.ndarray
    n_atoms: int
    kind: str = "planar-angles"
    singular_values: np.ndarray = field(default=None, repr=False)

    @property
    def D(self):
        return self.projection.shape[1]

    def transform(self, configs) -> np.ndarray:
        feats = featurize_planar_angles(configs)
        return (feats - self.mean) @ self.projection


def fit_featurization(configs, D: int, rank_rtol: float = 1e-12) -> FeaturizationMap:
    """Mean-center the planar-angle features and keep the top ``D`` right singular vectors."""
    pos = np.stack([_as_positions(c) for c in configs]) if not isinstance(configs, np.ndarray) \
        else np.asarray(configs, dtype=np.float64)
    feats = featurize_planar_angles(pos)
    return fit_projection(feats, D, n_atoms=pos.shape[1], rank_rtol=rank_rtol)


def fit_projection(feats, D: int, n_atoms: int = 0, rank_rtol: float = 1e-12) -> FeaturizationMap:
    feats = np.asarray(feats, dtype=np.float64)
    n, F = feats.shape
    if D > min(n, F):
        raise RankDeficient(f"cannot keep {D} components from {n} samples of {F} features")
    mean = feats.mean(axis=0)
    _, s, vt = np.linalg.svd(feats - mean, full_matrices=False)
    if s[0] == 0 or s[D - 1] <= rank_rtol * s[0]:
        raise RankDeficient(f"feature matrix has numerical rank < {D}")
    V = vt[:D].T
    idx = np.argmax(np.abs(V), axis=0)
    V = V * np.sign(V[idx, np.arange(D)])
    return FeaturizationMap(projection=V, mean=mean, n_atoms=n_atoms, singular_values=s)


def pushforward_matrix(config, fmap: FeaturizationMap, _triples=None, rcond: float = 1e-8) -> np.ndarray:
    """``(V^T J)^+ ^T``: maps configuration gradients to gradients in the feature chart.

    ``V^T J`` is the Jacobian of configuration -> projected features. The
    pseudoinverse gives the least-squares gradient lying in its range, the
    tangent space of the shape space as embedded in ``R^D``, so directional
    derivatives along any configuration curve are reproduced for functions
    invariant under rigid motions and scaling.
    """
    J = planar_angle_jacobian(config, _triples)
    return np.linalg.pinv(fmap.projection.T @ J, rcond=rcond).T


def pushforward_gradient(fn: DictFunction, config, fmap: FeaturizationMap) -> np.ndarray:
    """Least-squares pushforward of ``fn``'s configuration gradient into ``R^D``."""
    return pushforward_matrix(config, fmap) @ np.asarray(fn.gradient(_as_positions(config)))


class MolecularDictionary(Dictionary):
    """Dictionary of configuration-space functions seen through a featurization.

    Evaluation at row ``i`` of a cloud uses the paired configuration
    ``cloud.configs[i]``; gradients are pushed forward with ``fmap``.
    """

    def __init__(self, functions, fmap: FeaturizationMap, quadruples=None):
        super().__init__(functions)
        self.fmap = fmap
        self.quadruples = list(quadruples) if quadruples is not None else None
        self._triples = angle_triples(fmap.n_atoms) if fmap.n_atoms else None

    def _configs(self, cloud):
        if cloud.configs is None:
            raise ValueError("molecular dictionary needs a cloud with paired configurations")
        return cloud.configs

    def values(self, cloud, indices=None):
        configs = self._configs(cloud)
        indices = range(cloud.n) if indices is None else indices
        return np.array([[f.value(configs[i]) for f in self.functions] for i in indices])

    def config_gradients(self, config) -> np.ndarray:
        """``(p, 3 * n_atoms)`` configuration-space gradients."""
        return np.array([f.gradient(config) for f in self.functions])

    def gradients(self, cloud, indices=None):
        configs = self._configs(cloud)
        indices = list(range(cloud.n) if indices is None else indices)
        out = np.empty((len(indices), self.p, self.fmap.D))
        for row, i in enumerate(indices):
            P = pushforward_matrix(configs[i], self.fmap, self._triples)
            out[row] = (P @ self.config_gradients(configs[i]).T).T
        return out

    def subset(self, indices):
        q = [self.quadruples[j] for j in indices] if self.quadruples is not None else None
        return MolecularDictionary([self.functions[j] for j in indices], self.fmap, q)


def torsion_dictionary(atom_labels, bonds, fmap: FeaturizationMap) -> MolecularDictionary:
    quads = bond_torsions(atom_labels, bonds)
    return MolecularDictionary([torsion(q) for q in quads], fmap, quads)
