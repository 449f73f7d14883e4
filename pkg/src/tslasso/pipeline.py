"""End-to-end support selection: subsample, tangent frames, project, select."""

from __future__ import annotations

import logging
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from . import grouplasso
from .exceptions import ConfigError, TSLassoError, ZeroGradientFunction
from .grouplasso import ProjectedDesign
from .pointcloud import KERNELS, KernelSpec, PointCloud
from .tangent import estimate_tangent_frames

logger = logging.getLogger(__name__)

SCHEMA = 1
RULES = ("binary-search", "last-surviving")
FAILED = "FAILED"


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one selection run.

    ``epsilon_n`` defaults to ``r_n``. Replicate ``k`` uses seed ``seed + k``.
    """

    d: int = 2
    r_n: float = 1.0
    epsilon_n: Optional[float] = None
    n_prime: int = 100
    omega: int = 1
    seed: int = 0
    kernel: str = "gaussian"
    rule: str = "binary-search"
    tol: float = 1e-8
    max_iter: int = 5000
    normalize_over: str = "subsample"

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError(f"d must be >= 1, got {self.d}")
        if not self.r_n > 0:
            raise ConfigError(f"r_n must be positive, got {self.r_n}")
        if self.epsilon_n is not None and not self.epsilon_n > 0:
            raise ConfigError(f"epsilon_n must be positive, got {self.epsilon_n}")
        if self.n_prime < 1:
            raise ConfigError(f"n_prime must be positive, got {self.n_prime}")
        if self.omega < 1:
            raise ConfigError(f"omega must be >= 1, got {self.omega}")
        if self.kernel not in KERNELS:
            raise ConfigError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        if self.rule not in RULES:
            raise ConfigError(f"rule must be one of {RULES}, got {self.rule!r}")
        if self.normalize_over not in ("subsample", "all"):
            raise ConfigError(f"normalize_over must be 'subsample' or 'all', got {self.normalize_over!r}")
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")

    @property
    def bandwidth(self) -> float:
        return self.r_n if self.epsilon_n is None else self.epsilon_n

    def kernel_spec(self) -> KernelSpec:
        return KernelSpec(self.kernel, self.bandwidth)


@dataclass
class RunResult:
    support: tuple
    lambda_star: float
    gammas: np.ndarray
    path: list
    support_names: list = field(default_factory=list)
    lambda_zero: float = float("nan")
    flagged: bool = False
    indices: np.ndarray = None
    design: Optional[ProjectedDesign] = None
    grad_norms: Optional[np.ndarray] = None
    tangent: dict = field(default_factory=dict)
    support_rank: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    config: Optional[RunConfig] = None

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "support": list(self.support),
            "support_names": list(self.support_names),
            "lambda_star": self.lambda_star,
            "lambda_zero": self.lambda_zero,
            "flagged": self.flagged,
            "gammas": [float(g) for g in self.gammas],
            "indices": [int(i) for i in self.indices] if self.indices is not None else [],
            "path": [{"lambda": pp.lam, "support": list(pp.support),
                      "group_norms": [float(v) for v in pp.group_norms]} for pp in self.path],
            "tangent": self.tangent,
            "support_rank": list(self.support_rank),
            "timings": self.timings,
            "config": asdict(self.config) if self.config is not None else {},
        }


@dataclass
class ReplicateSummary:
    support_counts: Counter
    results: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)
    names: list = field(default_factory=list)

    @property
    def omega(self) -> int:
        return sum(self.support_counts.values())

    def modal_support(self):
        return max(self.support_counts.items(), key=lambda kv: (kv[1], kv[0] != FAILED))[0]

    def to_dict(self) -> dict:
        rows = []
        for supp, count in sorted(self.support_counts.items(), key=lambda kv: (-kv[1], str(kv[0]))):
            if supp == FAILED:
                rows.append({"support": FAILED, "names": [], "count": count})
            else:
                rows.append({"support": list(supp), "names": [self.names[j] for j in supp] if self.names else [],
                             "count": count})
        return {
            "schema": SCHEMA,
            "omega": self.omega,
            "support_counts": rows,
            "errors": {str(k): v for k, v in self.errors.items()},
            "replicates": [r.to_dict() if r is not None else None for r in self.results],
        }


def normalize(gradients, gammas=None):
    """Divide each function's gradients by its root-mean-square norm.

    Parameters
    ----------
    gradients : array of shape (n', p, D)
    gammas : array of shape (p,), optional
        Precomputed scales (e.g. over the whole cloud); computed from
        ``gradients`` when omitted.

    Returns
    -------
    scaled : array of shape (n', p, D)
    gammas : array of shape (p,)
    """
    gradients = np.asarray(gradients, dtype=np.float64)
    if gammas is None:
        gammas = np.sqrt(np.mean(np.sum(gradients**2, axis=2), axis=0))
    gammas = np.asarray(gammas, dtype=np.float64)
    zero = np.flatnonzero(gammas == 0)
    if zero.size:
        raise ZeroGradientFunction(f"functions {zero.tolist()} have zero gradient on the sample",
                                   index=int(zero[0]))
    return gradients / gammas[None, :, None], gammas


def project(frames, gradients) -> np.ndarray:
    """``X_i = T_i^T [grad f_j(xi_i)]``, shape ``(n', d, p)``."""
    T = np.stack([f.basis for f in frames])  # (n', D, d)
    return np.einsum("iDk,ipD->ikp", T, gradients)


def subsample(n: int, n_prime: int, seed: int) -> np.ndarray:
    if n_prime > n:
        raise ConfigError(f"n_prime={n_prime} exceeds n={n}")
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=n_prime, replace=False))


@contextmanager
def _stage(name, timings):
    t0 = time.perf_counter()
    try:
        yield
    except TSLassoError as err:
        err.stage = name
        raise
    finally:
        timings[name] = time.perf_counter() - t0


def run(cloud: PointCloud, dictionary, cfg: RunConfig, indices=None) -> RunResult:
    """Select ``cfg.d`` dictionary functions that parametrize the sampled manifold.

    Neighborhoods come from the full cloud; only the ``n_prime`` subsampled
    points (or ``indices``) enter the regression. Failures are re-raised with
    a ``stage`` attribute naming the step.
    """
    timings = {}
    with _stage("subsample", timings):
        I = subsample(cloud.n, cfg.n_prime, cfg.seed) if indices is None else np.asarray(indices)
    with _stage("tangent", timings):
        frames = estimate_tangent_frames(cloud, I, cfg.d, cfg.r_n, cfg.kernel_spec())
    with _stage("gradients", timings):
        grads = dictionary.gradients(cloud, I)
        gammas = None
        if cfg.normalize_over == "all":
            full = dictionary.gradients(cloud)
            gammas = np.sqrt(np.mean(np.sum(full**2, axis=2), axis=0))
    with _stage("normalize", timings):
        grads, gammas = normalize(grads, gammas)
    with _stage("project", timings):
        X = ProjectedDesign(project(frames, grads), gammas, I)
    with _stage("solve", timings):
        if cfg.rule == "binary-search":
            res = grouplasso.path_search(X, cfg.d, tol=cfg.tol, max_iter=cfg.max_iter)
        else:
            res = grouplasso.last_surviving(X, cfg.d, tol=cfg.tol, max_iter=cfg.max_iter)
    S = list(res.support)
    ranks = [int(np.linalg.matrix_rank(X.blocks[i][:, S])) if S else 0 for i in range(X.n)]
    names = list(getattr(dictionary, "names", []))
    return RunResult(
        support=tuple(S),
        support_names=[names[j] for j in S] if names else [],
        lambda_star=res.lambda_star,
        lambda_zero=res.lambda_zero,
        gammas=gammas,
        path=res.path,
        flagged=res.flagged,
        indices=I,
        design=X,
        grad_norms=np.linalg.norm(grads, axis=2),
        tangent={
            "n_neighbors": [f.n_neighbors for f in frames],
            "spectral_gap": [f.spectral_gap for f in frames],
            "singular_values": [f.singular_values.tolist() for f in frames],
        },
        support_rank=ranks,
        timings=timings,
        config=cfg,
    )


def replicate(cloud: PointCloud, dictionary, cfg: RunConfig, threads: int = 1) -> ReplicateSummary:
    """Repeat :func:`run` over ``cfg.omega`` seeds and count selected supports.

    Failed replicates are counted under ``"FAILED"`` with their error kept.
    """
    def one(k):
        try:
            return run(cloud, dictionary, replace(cfg, seed=cfg.seed + k)), None
        except TSLassoError as err:
            logger.warning("replicate %d failed: %s", k, err)
            return None, err

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(one, range(cfg.omega)))
    else:
        outs = [one(k) for k in range(cfg.omega)]
    counts = Counter()
    errors = {}
    results = []
    for k, (res, err) in enumerate(outs):
        results.append(res)
        if res is None:
            counts[FAILED] += 1
            errors[k] = f"{getattr(err, 'stage', '?')}: {err}"
        else:
            counts[res.support] += 1
    return ReplicateSummary(counts, results, errors, list(getattr(dictionary, "names", [])))
