"""On-disk datasets: dictionary spec JSON, bond diagrams and hashed manifests.

A dataset directory holds ``points.bin`` plus whatever the dictionary spec
references (``rotation.bin`` for the swiss roll; ``configs.bin``,
``projection.bin`` and ``feature_mean.bin`` for molecules) and a
``manifest.json`` with the SHA-256 of every file.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .dictionary import Dictionary, coordinate_function, swissroll_intrinsics, torsion
from .dictionary.molecular import FeaturizationMap, MolecularDictionary, bond_torsions
from .exceptions import ConfigError, FormatError
from .pointcloud import PointCloud, read_array, write_matrix

SCHEMA = 1
MANIFEST = "manifest.json"


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_json(path, obj) -> None:
    obj = {"schema": SCHEMA, **obj} if "schema" not in obj else obj
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n")


def read_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise FormatError(f"{path}: invalid JSON ({err})") from None


# ------------------------------------------------------------ bond diagram

def write_bond_diagram(path, atom_labels, bonds) -> None:
    write_json(path, {"atoms": list(atom_labels), "bonds": [list(map(int, b)) for b in bonds]})


def read_bond_diagram(path):
    doc = read_json(path)
    try:
        atoms = [str(a) for a in doc["atoms"]]
        bonds = [tuple(int(i) for i in b) for b in doc["bonds"]]
    except (KeyError, TypeError, ValueError) as err:
        raise FormatError(f"{path}: bond diagram needs 'atoms' and 'bonds' ({err})") from None
    for b in bonds:
        if len(b) != 2 or not all(0 <= i < len(atoms) for i in b) or b[0] == b[1]:
            raise FormatError(f"{path}: invalid bond {b}")
    return atoms, bonds


# ------------------------------------------------------- dictionary spec

def swissroll_spec(ambient_dim: int) -> dict:
    funcs = [{"kind": "swissroll", "which": "g1"}, {"kind": "swissroll", "which": "g2"}]
    funcs += [{"kind": "coordinate", "index": j} for j in range(ambient_dim)]
    return {"rotation": "rotation.bin", "functions": funcs}


def molecular_spec(n_atoms: int, quadruples=None) -> dict:
    funcs = ([{"kind": "bond_torsions"}] if quadruples is None
             else [{"kind": "torsion", "atoms": list(map(int, q))} for q in quadruples])
    return {
        "featurization": {"kind": "planar-angles", "n_atoms": int(n_atoms),
                          "projection": "projection.bin", "mean": "feature_mean.bin"},
        "configs": "configs.bin",
        "bond_diagram": "bonds.json",
        "functions": funcs,
    }


def _ref(base: Path, doc: dict, key: str) -> Path:
    if key not in doc:
        raise ConfigError(f"dictionary spec is missing {key!r}")
    return base / doc[key]


def load_dictionary(path):
    """Build a dictionary from a spec file; references resolve next to it.

    Function kinds: ``coordinate`` (``index``), ``swissroll`` (``which`` in
    g1, g2; needs top-level ``rotation``), ``torsion`` (``atoms``) and
    ``bond_torsions`` (expands over the bond diagram). Torsion kinds need a
    top-level ``featurization`` block.
    """
    path = Path(path)
    doc = read_json(path)
    base = path.parent
    funcs = doc.get("functions")
    if not isinstance(funcs, list) or not funcs:
        raise ConfigError(f"{path}: 'functions' must be a non-empty list")
    kinds = {f.get("kind") for f in funcs}
    molecular = bool(kinds & {"torsion", "bond_torsions"})
    if molecular and kinds - {"torsion", "bond_torsions"}:
        raise ConfigError(f"{path}: torsions cannot be mixed with ambient functions")

    if molecular:
        fz = doc.get("featurization")
        if not isinstance(fz, dict):
            raise ConfigError(f"{path}: torsion dictionaries need a 'featurization' block")
        V = read_array(_ref(base, fz, "projection"), format="raw")
        mean = read_array(_ref(base, fz, "mean"), format="raw").ravel()
        fmap = FeaturizationMap(V, mean, int(fz.get("n_atoms", 0)))
        quads = []
        for k, f in enumerate(funcs):
            if f["kind"] == "torsion":
                q = f.get("atoms")
                if not isinstance(q, list) or len(q) != 4:
                    raise ConfigError(f"{path}: function {k} needs 'atoms' with 4 indices")
                quads.append(tuple(int(i) for i in q))
            else:
                atoms, bonds = read_bond_diagram(_ref(base, doc, "bond_diagram"))
                quads.extend(bond_torsions(atoms, bonds))
        return MolecularDictionary([torsion(q) for q in quads], fmap, quads)

    out = []
    g = None
    for k, f in enumerate(funcs):
        kind = f.get("kind")
        if kind == "coordinate":
            if "index" not in f:
                raise ConfigError(f"{path}: function {k} needs 'index'")
            out.append(coordinate_function(int(f["index"]), name=f.get("name")))
        elif kind == "swissroll":
            if g is None:
                g = dict(zip(("g1", "g2"), swissroll_intrinsics(read_array(_ref(base, doc, "rotation"), "raw"))))
            if f.get("which") not in g:
                raise ConfigError(f"{path}: function {k} has unknown 'which' {f.get('which')!r}")
            out.append(g[f["which"]])
        else:
            raise ConfigError(f"{path}: function {k} has unknown kind {kind!r}")
    return Dictionary(out)


def load_cloud(data_dir, points="points.bin", configs=None, n_atoms=None) -> PointCloud:
    """Points plus, for molecular data, the paired ``(n, n_atoms, 3)`` configurations."""
    data_dir = Path(data_dir)
    pts = read_array(data_dir / points, format="raw")
    cfg = None
    if configs is not None:
        flat = read_array(data_dir / configs, format="raw")
        if n_atoms is None:
            n_atoms = flat.shape[1] // 3
        if flat.shape[1] != 3 * n_atoms:
            raise FormatError(f"{data_dir / configs}: expected {3 * n_atoms} columns, got {flat.shape[1]}")
        cfg = flat.reshape(flat.shape[0], n_atoms, 3)
    return PointCloud(pts, configs=cfg)


def write_configs(path, configs) -> None:
    configs = np.asarray(configs)
    write_matrix(path, configs.reshape(configs.shape[0], -1), format="raw")


# --------------------------------------------------------------- manifest

def write_manifest(out_dir, files, **fields) -> dict:
    out_dir = Path(out_dir)
    doc = {"schema": SCHEMA, **fields, "files": {f: sha256(out_dir / f) for f in sorted(files)}}
    write_json(out_dir / MANIFEST, doc)
    return doc


def verify_manifest(data_dir) -> dict:
    """Check every listed hash; raises ``FileNotFoundError`` or ``FormatError``."""
    data_dir = Path(data_dir)
    doc = read_json(data_dir / MANIFEST)
    for name, digest in doc.get("files", {}).items():
        p = data_dir / name
        if not p.exists():
            raise FileNotFoundError(f"no such file: {p}")
        if sha256(p) != digest:
            raise FormatError(f"{p}: hash does not match manifest")
    return doc
