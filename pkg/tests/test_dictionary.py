import numpy as np
import pytest

from tslasso.dictionary import (
    DictFunction,
    Dictionary,
    coordinate_dictionary,
    coordinate_function,
    finite_difference_error,
    swissroll_intrinsics,
)
from tslasso.exceptions import ConfigError
from tslasso.pointcloud import PointCloud


def test_coordinate_function_values():
    f0, f1 = coordinate_function(0), coordinate_function(1)
    x = np.array([3.0, 5.0])
    assert f0.value(x) == 3 and f1.value(x) == 5
    np.testing.assert_array_equal(f0.gradient(x), [1, 0])
    np.testing.assert_array_equal(f1.gradient(x), [0, 1])
    assert f0.name == "x0"


def test_coordinate_function_index_error():
    with pytest.raises(IndexError):
        coordinate_function(2, D=2)
    with pytest.raises(IndexError):
        coordinate_function(3).gradient(np.zeros(2))


def test_coordinate_fd_exact():
    rng = np.random.default_rng(0)
    # central differences of a linear function only carry round-off, ~eps |x| / h
    for f in coordinate_dictionary(6):
        for x in rng.standard_normal((20, 6)):
            assert finite_difference_error(f, x) <= 1e-9


def test_dictionary_names_unique():
    with pytest.raises(ConfigError):
        Dictionary([coordinate_function(0), coordinate_function(0)])
    with pytest.raises(ConfigError):
        Dictionary([])


def test_dictionary_shapes():
    cloud = PointCloud(np.random.default_rng(1).standard_normal((7, 4)))
    dic = coordinate_dictionary(4)
    assert dic.p == 4 and dic.names == ["x0", "x1", "x2", "x3"]
    assert dic.gradients(cloud, [0, 3]).shape == (2, 4, 4)
    np.testing.assert_array_equal(dic.values(cloud), cloud.points)
    assert dic.subset([2, 0]).names == ["x2", "x0"]


def test_scaled():
    f = coordinate_function(1).scaled(3.0)
    assert f.value(np.array([0.0, 2.0])) == 6.0
    np.testing.assert_array_equal(f.gradient(np.zeros(2)), [0, 3])


def test_swissroll_needs_rotation():
    with pytest.raises(ConfigError):
        swissroll_intrinsics(None)


def test_swissroll_intrinsics_match_truth(roll):
    g1, g2 = roll.dictionary[0], roll.dictionary[1]
    pts, truth = roll.cloud.points, roll.truth
    vals = np.array([[g1.value(x), g2.value(x)] for x in pts])
    np.testing.assert_allclose(vals, truth, atol=1e-8, rtol=0)


def test_swissroll_g2_gradient_is_rotated_height(roll):
    g2 = roll.dictionary[1]
    np.testing.assert_allclose(g2.gradient(roll.cloud.points[0]), roll.rotation[:, 1], atol=1e-15)


def test_swissroll_gradients_fd(roll):
    rng = np.random.default_rng(2)
    for x in roll.cloud.points[rng.choice(roll.cloud.n, 100, replace=False)]:
        for f in roll.dictionary.functions[:2]:
            assert finite_difference_error(f, x) <= 1e-5


def test_fd_error_detects_wrong_gradient():
    f = DictFunction("bad", lambda x: float(x @ x), lambda x: x)  # true gradient is 2x
    assert finite_difference_error(f, np.ones(3)) > 0.4
