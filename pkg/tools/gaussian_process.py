"""
Exact Gaussian Process regression over the policy space.

Zero prior mean, Matern-5/2 covariance, fixed hyperparameters. Rewards are
standardised before fitting and mapped back on output, so far from data the
posterior returns to the mean observed reward rather than to zero.
"""

import logging
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.spatial.distance import cdist

from models.models import KernelParams, Policy
from tools.policy_space import CandidateSet
from utils.errors import DomainError, IllConditioned

logger = logging.getLogger(__name__)

SQRT5 = np.sqrt(5.0)
JITTER = 1e-9
VARIANCE_CLAMP = 1e-10

PointsLike = Union[np.ndarray, Sequence[Policy]]


def _as_points(points: PointsLike) -> np.ndarray:
    if isinstance(points, np.ndarray):
        return np.atleast_2d(points).astype(float)
    return np.array([p.as_array() for p in points], dtype=float).reshape(-1, 2)


def matern52_from_distance(r: np.ndarray, params: KernelParams) -> np.ndarray:
    s = SQRT5 * np.asarray(r, dtype=float) / params.lengthscale
    return params.signal_variance * (1.0 + s + s**2 / 3.0) * np.exp(-s)


def matern52(a: Policy, b: Policy, params: KernelParams) -> float:
    """sigma_f^2 (1 + sqrt5 r/l + 5 r^2 / 3 l^2) exp(-sqrt5 r/l), r = |a - b|."""
    return float(matern52_from_distance(a.distance(b), params))


def kernel_matrix(x: PointsLike, y: PointsLike, params: KernelParams) -> np.ndarray:
    return matern52_from_distance(cdist(_as_points(x), _as_points(y)), params)


class GPModel:
    """
    A fitted posterior. Immutable after construction and safe for concurrent queries.

    Attributes:
        inputs: (n, 2) training coordinates
        rewards: raw observed rewards
        noise_variance: likelihood variance in standardised units
        params: kernel parameters
        factor: lower Cholesky factor of K + (noise + jitter) I
        alpha: factor solve against the standardised rewards
    """

    def __init__(
        self,
        inputs: np.ndarray,
        rewards: np.ndarray,
        noise_variance: float,
        params: KernelParams,
        y_mean: float = 0.0,
        y_scale: float = 1.0,
        factor: Optional[np.ndarray] = None,
        alpha: Optional[np.ndarray] = None,
    ):
        self.inputs = inputs
        self.rewards = rewards
        self.noise_variance = noise_variance
        self.params = params
        self.y_mean = y_mean
        self.y_scale = y_scale
        self.factor = factor
        self.alpha = alpha
        for array in (self.inputs, self.rewards, self.factor, self.alpha):
            if array is not None:
                array.setflags(write=False)

    @classmethod
    def prior(cls, params: KernelParams, noise_variance: float = 0.01) -> "GPModel":
        """Model with no data: mean 0, variance k(a, a)."""
        return cls(np.zeros((0, 2)), np.zeros(0), noise_variance, params)

    @property
    def size(self) -> int:
        return int(self.inputs.shape[0])

    def prior_variance(self) -> float:
        """k(a, a) in reward units."""
        return self.params.signal_variance * self.y_scale**2

    def predict(self, points: PointsLike) -> Tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance (reward units) at each point."""
        x = _as_points(points)
        if self.size == 0:
            return np.zeros(len(x)), np.full(len(x), self.params.signal_variance)
        cross = kernel_matrix(x, self.inputs, self.params)
        mean_z = cross @ self.alpha
        v = linalg.solve_triangular(self.factor, cross.T, lower=True, check_finite=False)
        var_z = self.params.signal_variance - np.sum(v**2, axis=0)
        if np.any(var_z < -VARIANCE_CLAMP):
            raise IllConditioned(f"negative posterior variance {var_z.min():.3g}; raise the noise variance")
        var_z = np.maximum(var_z, 0.0)
        return self.y_mean + self.y_scale * mean_z, self.y_scale**2 * var_z


def fit(
    inputs: PointsLike,
    rewards: Iterable[float],
    noise_variance: float,
    params: KernelParams,
) -> GPModel:
    """Factorise K + sigma^2 I over standardised rewards."""
    x = _as_points(inputs)
    y = np.asarray(list(rewards), dtype=float)
    if len(x) == 0:
        raise DomainError("cannot fit a GP on zero observations")
    if len(x) != len(y):
        raise DomainError(f"{len(x)} inputs but {len(y)} rewards")
    if noise_variance <= 0:
        raise DomainError("noise variance must be positive")
    if not np.all(np.isfinite(y)):
        raise DomainError("rewards must be finite")

    y_mean = float(y.mean())
    y_scale = float(y.std())
    if not np.isfinite(y_scale) or y_scale <= 0.0:
        y_scale = 1.0
    z = (y - y_mean) / y_scale

    gram = kernel_matrix(x, x, params)
    gram[np.diag_indices_from(gram)] += noise_variance + JITTER
    try:
        factor = linalg.cholesky(gram, lower=True, check_finite=False)
    except linalg.LinAlgError as e:
        raise IllConditioned(f"kernel matrix is not positive definite ({len(x)} points)") from e
    alpha = linalg.cho_solve((factor, True), z, check_finite=False)
    return GPModel(x, y, noise_variance, params, y_mean, y_scale, factor, alpha)


def posterior(model: GPModel, a: Policy) -> Tuple[float, float]:
    mean, var = model.predict([a])
    return float(mean[0]), float(var[0])


def surface(model: GPModel, grid: CandidateSet) -> pd.DataFrame:
    """Posterior at every grid point, in grid order: a_itn, a_irs, post_mean, post_sd."""
    mean, var = model.predict(grid.coords)
    return pd.DataFrame(
        {
            "a_itn": grid.coords[:, 0],
            "a_irs": grid.coords[:, 1],
            "post_mean": mean,
            "post_sd": np.sqrt(var),
        }
    )
