import json

import numpy as np
import pytest

from tslasso import io
from tslasso.dictionary import MolecularDictionary
from tslasso.exceptions import ConfigError, FormatError
from tslasso.pointcloud import write_matrix
from tslasso.synth import ETHANOL_BONDS, ETHANOL_LABELS


def test_bond_diagram_roundtrip(tmp_path):
    io.write_bond_diagram(tmp_path / "b.json", ETHANOL_LABELS, ETHANOL_BONDS)
    atoms, bonds = io.read_bond_diagram(tmp_path / "b.json")
    assert atoms == list(ETHANOL_LABELS) and bonds == list(ETHANOL_BONDS)
    assert json.loads((tmp_path / "b.json").read_text())["schema"] == 1


def test_bond_diagram_invalid(tmp_path):
    (tmp_path / "b.json").write_text('{"atoms": ["C", "C"], "bonds": [[0, 5]]}')
    with pytest.raises(FormatError):
        io.read_bond_diagram(tmp_path / "b.json")


def test_swissroll_dictionary_roundtrip(tmp_path, roll):
    write_matrix(tmp_path / "rotation.bin", roll.rotation)
    io.write_json(tmp_path / "dictionary.json", io.swissroll_spec(49))
    dic = io.load_dictionary(tmp_path / "dictionary.json")
    assert dic.names == roll.dictionary.names
    x = roll.cloud.points[3]
    for a, b in zip(dic, roll.dictionary):
        assert a.value(x) == b.value(x)
        np.testing.assert_array_equal(a.gradient(x), b.gradient(x))


def test_molecular_dictionary_roundtrip(tmp_path, small_ethanol):
    d = small_ethanol
    write_matrix(tmp_path / "projection.bin", d.fmap.projection)
    write_matrix(tmp_path / "feature_mean.bin", d.fmap.mean[None])
    io.write_bond_diagram(tmp_path / "bonds.json", d.atom_labels, d.bonds)
    io.write_configs(tmp_path / "configs.bin", d.configs)
    write_matrix(tmp_path / "points.bin", d.cloud.points)
    io.write_json(tmp_path / "dictionary.json", io.molecular_spec(9))
    dic = io.load_dictionary(tmp_path / "dictionary.json")
    assert isinstance(dic, MolecularDictionary) and dic.names == d.dictionary.names
    cloud = io.load_cloud(tmp_path, configs="configs.bin", n_atoms=9)
    np.testing.assert_array_equal(cloud.configs, d.configs)
    np.testing.assert_allclose(dic.gradients(cloud, [0, 5]), d.dictionary.gradients(d.cloud, [0, 5]), atol=1e-12)


def test_explicit_torsion_spec(tmp_path, small_ethanol):
    d = small_ethanol
    write_matrix(tmp_path / "projection.bin", d.fmap.projection)
    write_matrix(tmp_path / "feature_mean.bin", d.fmap.mean[None])
    io.write_json(tmp_path / "dictionary.json", io.molecular_spec(9, [(3, 0, 1, 2), (0, 1, 2, 8)]))
    assert io.load_dictionary(tmp_path / "dictionary.json").names == ["tor_3_0_1_2", "tor_0_1_2_8"]


@pytest.mark.parametrize("doc", [
    {"functions": []},
    {"functions": [{"kind": "bogus"}]},
    {"functions": [{"kind": "coordinate"}]},
    {"functions": [{"kind": "torsion", "atoms": [0, 1, 2, 3]}]},
    {"functions": [{"kind": "coordinate", "index": 0}, {"kind": "bond_torsions"}]},
])
def test_bad_dictionary_specs(tmp_path, doc):
    (tmp_path / "d.json").write_text(json.dumps(doc))
    with pytest.raises(ConfigError):
        io.load_dictionary(tmp_path / "d.json")


def test_invalid_json(tmp_path):
    (tmp_path / "d.json").write_text("{")
    with pytest.raises(FormatError):
        io.load_dictionary(tmp_path / "d.json")


def test_manifest_detects_tampering(tmp_path):
    (tmp_path / "a.txt").write_text("hello")
    io.write_manifest(tmp_path, ["a.txt"], seed=1)
    assert io.verify_manifest(tmp_path)["seed"] == 1
    (tmp_path / "a.txt").write_text("hellO")
    with pytest.raises(FormatError):
        io.verify_manifest(tmp_path)
    (tmp_path / "a.txt").unlink()
    with pytest.raises(FileNotFoundError):
        io.verify_manifest(tmp_path)
