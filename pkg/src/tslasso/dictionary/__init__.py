"""Dictionary functions: ambient coordinates, swiss-roll intrinsics and molecular torsions."""

from .base import (
    DictFunction,
    Dictionary,
    coordinate_dictionary,
    coordinate_function,
    finite_difference_error,
    swissroll_intrinsics,
)
from .molecular import (
    FeaturizationMap,
    MolecularConfig,
    MolecularDictionary,
    bond_torsions,
    featurize_planar_angles,
    fit_featurization,
    planar_angle_jacobian,
    pushforward_gradient,
    torsion,
    torsion_dictionary,
)

__all__ = [
    "DictFunction",
    "Dictionary",
    "FeaturizationMap",
    "MolecularConfig",
    "MolecularDictionary",
    "bond_torsions",
    "coordinate_dictionary",
    "coordinate_function",
    "featurize_planar_angles",
    "finite_difference_error",
    "fit_featurization",
    "planar_angle_jacobian",
    "pushforward_gradient",
    "swissroll_intrinsics",
    "torsion",
    "torsion_dictionary",
]
