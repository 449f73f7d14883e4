"""scikit-learn style wrapper around :func:`tslasso.pipeline.run`."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .pipeline import RunConfig, run
from .pointcloud import PointCloud


class TSLasso(TransformerMixin, BaseEstimator):
    """Select ``d`` dictionary functions that parametrize the data manifold.

    Parameters
    ----------
    dictionary : Dictionary
        Candidate functions with analytic gradients. Molecular dictionaries
        need the paired configurations passed to :meth:`fit`.
    d : int, default=2
        Intrinsic dimension.
    r_n : float, default=1.0
        Neighborhood radius for tangent estimation.
    epsilon_n : float, optional
        Kernel bandwidth; defaults to ``r_n``.
    n_prime : int, default=100
        Number of subsampled points entering the regression.
    seed : int, default=0
    kernel : {"gaussian", "epanechnikov", "constant"}, default="gaussian"
    rule : {"binary-search", "last-surviving"}, default="binary-search"
    tol : float, default=1e-8
    max_iter : int, default=5000
    normalize_over : {"subsample", "all"}, default="subsample"

    Attributes
    ----------
    support_ : tuple of int
        Selected function indices, ascending.
    support_names_ : list of str
    lambda_ : float
        Regularization value at which the support was read off.
    gammas_ : ndarray of shape (p,)
        Normalization scale of each function.
    path_ : list of PathPoint
    result_ : RunResult
    n_features_in_ : int

    Examples
    --------
    >>> from tslasso.synth import swiss_roll, SwissRollSpec
    >>> data = swiss_roll(SwissRollSpec(n=1000, seed=0))
    >>> est = TSLasso(data.dictionary, d=2, r_n=3.0).fit(data.cloud.points)
    >>> est.support_names_
    ['g1', 'g2']
    """

    def __init__(self, dictionary=None, d=2, r_n=1.0, epsilon_n=None, n_prime=100, seed=0,
                 kernel="gaussian", rule="binary-search", tol=1e-8, max_iter=5000,
                 normalize_over="subsample"):
        self.dictionary = dictionary
        self.d = d
        self.r_n = r_n
        self.epsilon_n = epsilon_n
        self.n_prime = n_prime
        self.seed = seed
        self.kernel = kernel
        self.rule = rule
        self.tol = tol
        self.max_iter = max_iter
        self.normalize_over = normalize_over

    def _config(self) -> RunConfig:
        return RunConfig(d=self.d, r_n=self.r_n, epsilon_n=self.epsilon_n, n_prime=self.n_prime,
                         seed=self.seed, kernel=self.kernel, rule=self.rule, tol=self.tol,
                         max_iter=self.max_iter, normalize_over=self.normalize_over)

    def _cloud(self, X, configs):
        X = check_array(X, dtype=np.float64, ensure_min_samples=1)
        return PointCloud(X, configs=configs)

    def fit(self, X, y=None, configs=None):
        """Estimate tangent spaces on ``X`` and solve for the support.

        Parameters
        ----------
        X : array-like of shape (n_samples, n_features)
        y : ignored
        configs : array of shape (n_samples, n_atoms, 3), optional
            Configurations paired with rows of ``X`` (molecular dictionaries).
        """
        if self.dictionary is None:
            raise ValueError("TSLasso needs a dictionary")
        cfg = self._config()
        cloud = self._cloud(X, configs)
        self.n_features_in_ = cloud.D
        res = run(cloud, self.dictionary, cfg)
        self.result_ = res
        self.support_ = res.support
        self.support_names_ = res.support_names
        self.lambda_ = res.lambda_star
        self.gammas_ = res.gammas
        self.path_ = res.path
        return self

    def get_support(self, indices=False):
        """Boolean mask over the dictionary, or the selected indices."""
        check_is_fitted(self, "support_")
        if indices:
            return np.array(self.support_, dtype=int)
        mask = np.zeros(self.dictionary.p, dtype=bool)
        mask[list(self.support_)] = True
        return mask

    def transform(self, X, configs=None):
        """Evaluate the selected functions: the learned coordinates, ``(n_samples, d)``."""
        check_is_fitted(self, "support_")
        cloud = self._cloud(X, configs)
        if cloud.D != self.n_features_in_:
            raise ValueError(f"X has {cloud.D} features, expected {self.n_features_in_}")
        return self.dictionary.subset(list(self.support_)).values(cloud)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "support_")
        return np.array(self.support_names_, dtype=object)
