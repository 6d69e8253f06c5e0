"""Reference policies: uniform random play and Thompson sampling on a
per-action Bayesian linear regression."""
from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular


def uniform_select(num_actions: int, rng: np.random.Generator) -> int:
    return int(rng.integers(num_actions))


class UniformPolicy:
    def __init__(self, num_actions: int, rng: np.random.Generator | None = None):
        self.num_actions = num_actions
        self.rng = rng or np.random.default_rng()

    def select_action(self, x) -> int:
        return uniform_select(self.num_actions, self.rng)

    def observe(self, x, a, r) -> None:
        pass


class LinearPosterior:
    """Gaussian posterior over per-action weights with a ridge prior.

    Each action keeps ``A = lam * I + sum x x^T`` and ``b = sum r x`` over
    contexts ``x`` extended with an intercept; the posterior is
    ``N(A^-1 b, noise_var * A^-1)``.
    """

    def __init__(self, num_actions: int, dim: int, lam: float = 1.0, noise_var: float = 0.25):
        if lam <= 0:
            raise ValueError("ridge prior scale must be positive")
        if noise_var < 0:
            raise ValueError("noise variance must be nonnegative")
        self.num_actions = num_actions
        self.dim = dim
        self.lam = lam
        self.noise_var = noise_var
        d = dim + 1
        self.precision = np.tile(lam * np.eye(d), (num_actions, 1, 1))
        self.moment = np.zeros((num_actions, d))

    def features(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ValueError(f"context has shape {x.shape}, expected ({self.dim},)")
        return np.append(x, 1.0)

    def _factor(self, a):
        try:
            return cho_factor(self.precision[a], lower=True)
        except LinAlgError as err:  # cannot happen while lam > 0
            raise LinAlgError(f"posterior precision of action {a} is not positive definite") from err

    def mean(self, a: int) -> np.ndarray:
        return cho_solve(self._factor(a), self.moment[a])

    def sample(self, a: int, rng: np.random.Generator) -> np.ndarray:
        factor = self._factor(a)
        mu = cho_solve(factor, self.moment[a])
        if self.noise_var == 0:
            return mu
        # A = L L^T, so L^-T z has covariance A^-1
        z = rng.standard_normal(mu.shape)
        return mu + np.sqrt(self.noise_var) * solve_triangular(factor[0], z, lower=True, trans="T")


def linear_ts_select(posterior: LinearPosterior, x, rng: np.random.Generator) -> int:
    phi = posterior.features(x)
    preds = [phi @ posterior.sample(a, rng) for a in range(posterior.num_actions)]
    return int(np.argmax(preds))


def linear_ts_update(posterior: LinearPosterior, x, a: int, r: float) -> None:
    phi = posterior.features(x)
    posterior.precision[a] += np.outer(phi, phi)
    posterior.moment[a] += r * phi


class LinearTSPolicy:
    def __init__(self, num_actions: int, dim: int, lam: float = 1.0, noise_var: float = 0.25,
                 rng: np.random.Generator | None = None):
        self.posterior = LinearPosterior(num_actions, dim, lam, noise_var)
        self.rng = rng or np.random.default_rng()

    def select_action(self, x) -> int:
        return linear_ts_select(self.posterior, x, self.rng)

    def observe(self, x, a, r) -> None:
        linear_ts_update(self.posterior, x, a, r)
