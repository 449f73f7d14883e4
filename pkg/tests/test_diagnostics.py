import json

import numpy as np
import pytest

from oracles import conditions_by_hand
from tslasso.diagnostics import cosine_matrix, sampled_conditions, write_cosine_csv
from tslasso.exceptions import RankDeficient
from tslasso.grouplasso import ProjectedDesign
from tslasso.pipeline import RunConfig, normalize, project, subsample
from tslasso.tangent import estimate_tangent_frames


def test_cosine_duplicate_column():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((5, 2, 3))
    X[:, :, 2] = -2.0 * X[:, :, 0]
    C = cosine_matrix(ProjectedDesign(X))
    assert C[0, 2] == pytest.approx(1.0)


def test_cosine_orthogonal_coordinates():
    X = np.tile(np.eye(2), (4, 1, 1))
    C = cosine_matrix(ProjectedDesign(X))
    np.testing.assert_allclose(C, np.eye(2))


def test_cosine_properties():
    C = cosine_matrix(ProjectedDesign(np.random.default_rng(1).standard_normal((6, 2, 5))))
    np.testing.assert_allclose(C, C.T)
    np.testing.assert_allclose(np.diag(C), 1.0)
    assert np.all((C >= 0) & (C <= 1))


def test_cosine_zero_column_masked():
    X = np.random.default_rng(2).standard_normal((3, 2, 3))
    X[0, :, 1] = 0.0
    C = cosine_matrix(ProjectedDesign(X))
    Xr = X[1:]
    expected = np.mean([abs(Xr[i, :, 0] @ Xr[i, :, 1]) / np.linalg.norm(Xr[i, :, 0]) / np.linalg.norm(Xr[i, :, 1])
                        for i in range(2)])
    assert C[0, 1] == pytest.approx(expected)
    X[:, :, 1] = 0.0
    C = cosine_matrix(ProjectedDesign(X))
    assert np.isnan(C[0, 1]) and np.isnan(C[1, 1])


def test_conditions_orthonormal_unit():
    X = np.tile(np.eye(2), (3, 1, 1))
    X = np.concatenate([X, np.zeros((3, 2, 1)) + 0.1], axis=2)
    rep = sampled_conditions(ProjectedDesign(X), [0, 1], np.ones((3, 3)))
    assert rep.nu_S == pytest.approx(0.0, abs=1e-14)
    assert rep.b_S == pytest.approx(1.0)


def test_conditions_p_equals_d():
    X = np.random.default_rng(3).standard_normal((4, 2, 2))
    rep = sampled_conditions(ProjectedDesign(X), [0, 1], np.ones((4, 2)))
    assert rep.mu_S == 0.0 and rep.notes


def test_conditions_match_hand_transcription():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((2, 2, 4))
    norms = rng.uniform(0.5, 2.0, (2, 4))
    rep = sampled_conditions(ProjectedDesign(X), [1, 3], norms, lam=0.2)
    ref = conditions_by_hand(X, [1, 3], norms)
    for key, val in ref.items():
        assert getattr(rep, key) == pytest.approx(val, rel=1e-12), key
    amp = (1 + ref["nu_S"] / ref["delta"] ** 2) ** 2
    assert rep.condition_flags["incoherence"] == (amp * ref["mu_S"] * ref["phi_S"] * ref["Gamma"] * 2 < 1)
    assert rep.condition_flags["signal"] == (0.2 * amp < ref["b_S"] * np.sqrt(2) / 2)


def test_conditions_rank_deficient_lists_points():
    X = np.random.default_rng(5).standard_normal((3, 2, 3))
    X[1, :, 1] = X[1, :, 0]
    with pytest.raises(RankDeficient) as info:
        sampled_conditions(ProjectedDesign(X, point_ids=np.array([10, 11, 12])), [0, 1], np.ones((3, 3)))
    assert info.value.points == [11]


def test_conditions_wrong_support_size():
    with pytest.raises(ValueError):
        sampled_conditions(ProjectedDesign(np.ones((1, 2, 3))), [0], np.ones((1, 3)))


def test_report_json_serializable():
    X = np.random.default_rng(6).standard_normal((3, 2, 3))
    doc = sampled_conditions(ProjectedDesign(X), [0, 2], np.ones((3, 3))).to_dict()
    assert json.loads(json.dumps(doc))["schema"] == 1
    assert doc["delta"] <= doc["Gamma"]


def test_cosine_csv(tmp_path):
    write_cosine_csv(np.array([[1.0, np.nan], [np.nan, 1.0]]), tmp_path / "c.csv", ["a", "b"])
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == ",a,b" and lines[1] == "a,1.0,"


def _design(data, r_n, scale=None):
    cfg = RunConfig(r_n=r_n)
    I = subsample(data.cloud.n, 100, 0)
    frames = estimate_tangent_frames(data.cloud, I, 2, r_n, cfg.kernel_spec())
    raw = data.dictionary.gradients(data.cloud, I)
    if scale is not None:
        raw = raw * scale[None, :, None]
    grads, gammas = normalize(raw)
    return ProjectedDesign(project(frames, grads), gammas, I), np.linalg.norm(grads, axis=2)


def test_scaling_a_function_changes_nothing(roll):
    X, norms = _design(roll, 3.0)
    scale = np.ones(roll.dictionary.p)
    scale[[0, 5]] = [7.0, 0.01]
    Xs, norms_s = _design(roll, 3.0, scale)
    np.testing.assert_allclose(cosine_matrix(Xs), cosine_matrix(X), atol=1e-12)
    a = sampled_conditions(X, [0, 1], norms, 1.0).to_dict()
    b = sampled_conditions(Xs, [0, 1], norms_s, 1.0).to_dict()
    for key in ("mu_S", "nu_S", "b_S", "phi_S", "Gamma", "delta"):
        assert b[key] == pytest.approx(a[key], rel=1e-9)


def test_mu_bounded_by_cross_cosines(roll):
    X, norms = _design(roll, 3.0)
    rep = sampled_conditions(X, [0, 1], norms)
    # renormalized inner products of projected columns never exceed the projected cosine scale
    proj = np.linalg.norm(X.blocks, axis=1)
    cross = np.abs(np.einsum("ikj,ikl->ijl", X.blocks[:, :, :2], X.blocks[:, :, 2:])) / (
        proj[:, :2, None] * proj[:, None, 2:])
    ratio = proj[:, :2, None] * proj[:, None, 2:] / (norms[:, :2, None] * norms[:, None, 2:])
    assert rep.mu_S <= np.max(cross * ratio) + 1e-12
    assert rep.mu_S <= np.max(cross) + 1e-12


def test_ethanol_two_block_cosine_structure(ethanol):
    X, _ = _design(ethanol, 1.0)
    C = cosine_matrix(X)
    a, b = ethanol.blocks["C-C"], ethanol.blocks["C-O"]
    for blk in (a, b):
        assert C[np.ix_(blk, blk)].min() >= 0.9
    assert C[np.ix_(a, b)].max() <= 0.25
