"""Bandit tasks: the synthetic wheel, Bernoulli context tables, and adapters
that turn classification / regression CSV files into bandits."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import pandas as pd

MAX_HORIZON = 5000
BERNOULLI = "bernoulli"
CONTINUOUS = "continuous"

CLASSIFICATION_TASKS = {"classification", "statlog", "adult", "census", "covertype"}
REGRESSION_TASKS = {"regression", "jester", "financial"}


class TaskError(ValueError):
    pass


def minmax_normalize(matrix) -> np.ndarray:
    """Map every column affinely onto [0, 1]; constant columns become zeros."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
        raise TaskError(f"need a non-empty 2-d matrix, got shape {m.shape}")
    lo = m.min(axis=0)
    span = m.max(axis=0) - lo
    out = np.zeros_like(m)
    ok = span > 0
    out[:, ok] = (m[:, ok] - lo[ok]) / span[ok]
    return out


def classification_reward(label: int, a: int) -> float:
    return 1.0 if a == label else 0.0


class BanditTask:
    """One episode of a contextual bandit problem.

    ``next_context`` draws the next context together with the full reward
    vector; the agent only ever sees ``reward(a)``, while the harness may read
    ``rewards()`` / ``mean_rewards()`` for regret accounting.
    """

    num_actions: int
    context_dim: int
    reward_kind: str
    reward_range: tuple[float, float]
    horizon: int

    def __init__(self):
        self._t = 0
        self._rewards = None
        self._means = None

    def next_context(self) -> np.ndarray:
        if self._t >= self.horizon:
            raise TaskError("task horizon exhausted")
        x, self._rewards, self._means = self._draw(self._t)
        self._t += 1
        return x

    def _draw(self, t):
        raise NotImplementedError

    def reward(self, a: int) -> float:
        if self._rewards is None:
            raise TaskError("call next_context first")
        return float(self._rewards[a])

    def rewards(self) -> np.ndarray:
        return self._rewards.copy()

    def mean_rewards(self) -> np.ndarray:
        return self._means.copy()

    def optimal_reward(self) -> float:
        return float(self._rewards.max())


@dataclass(frozen=True)
class WheelConfig:
    # defaults: the usual wheel means (1.2, 1.0, 50) and noise 0.01, scaled by 1/5
    delta: float = 0.95
    mu_low: float = 0.24
    mu_mid: float = 0.2
    mu_high: float = 10.0
    noise_sigma: float = 0.002
    reward_min: float = 0.0
    reward_max: float = 10.0

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise TaskError("delta must lie in (0, 1)")
        if not self.mu_high > self.mu_low > self.mu_mid:
            raise TaskError("wheel means must satisfy mu_high > mu_low > mu_mid")
        if not self.reward_min < self.reward_max:
            raise TaskError("empty reward range")


def wheel_quadrant_action(x) -> int:
    if x[0] > 0:
        return 1 if x[1] > 0 else 4
    return 2 if x[1] > 0 else 3


def wheel_means(config: WheelConfig, x) -> np.ndarray:
    means = np.full(5, config.mu_mid)
    means[0] = config.mu_low
    if np.hypot(x[0], x[1]) > config.delta:
        means[wheel_quadrant_action(x)] = config.mu_high
    return means


def wheel_step(config: WheelConfig, rng: np.random.Generator):
    """Draw a context uniformly on the unit disk and its mean-reward vector."""
    while True:
        x = rng.uniform(-1.0, 1.0, size=2)
        if x @ x <= 1.0:
            break
    return x, wheel_means(config, x)


class WheelTask(BanditTask):
    """Wheel bandit. Contexts are served rescaled from the disk to [0, 1]^2."""

    num_actions = 5
    context_dim = 2
    reward_kind = CONTINUOUS

    def __init__(self, config: WheelConfig | None = None, horizon: int = MAX_HORIZON,
                 rng: np.random.Generator | None = None):
        super().__init__()
        self.config = config or WheelConfig()
        self.horizon = horizon
        self.reward_range = (self.config.reward_min, self.config.reward_max)
        self.rng = rng or np.random.default_rng()
        self.raw_context = None

    def _draw(self, t):
        x, means = wheel_step(self.config, self.rng)
        noisy = means + self.rng.normal(0.0, self.config.noise_sigma, size=5)
        self.raw_context = x
        return (x + 1.0) / 2.0, np.clip(noisy, *self.reward_range), means


class BernoulliTableTask(BanditTask):
    """Contexts drawn uniformly from a fixed list; arm ``a`` in context ``i``
    pays 1 with probability ``theta[i, a]``."""

    reward_kind = BERNOULLI
    reward_range = (0.0, 1.0)

    def __init__(self, contexts, theta, horizon: int, rng: np.random.Generator | None = None):
        super().__init__()
        self.contexts = np.asarray(contexts, dtype=np.float64)
        self.theta = np.asarray(theta, dtype=np.float64)
        if self.theta.shape[0] != self.contexts.shape[0]:
            raise TaskError("one row of success probabilities per context")
        self.num_actions = self.theta.shape[1]
        self.context_dim = self.contexts.shape[1]
        self.horizon = horizon
        self.rng = rng or np.random.default_rng()
        self.context_index = None

    def _draw(self, t):
        i = int(self.rng.integers(len(self.contexts)))
        self.context_index = i
        draws = (self.rng.random(self.num_actions) < self.theta[i]).astype(np.float64)
        return self.contexts[i].copy(), draws, self.theta[i].copy()


def two_context_task(horizon: int = 10_000, gap: float = 0.4, rng=None) -> BernoulliTableTask:
    """Two antipodal contexts with swapped arm probabilities ``0.8`` / ``0.8 - gap``."""
    hi, lo = 0.8, 0.8 - gap
    return BernoulliTableTask([[0.25, 0.25], [0.75, 0.75]], [[hi, lo], [lo, hi]], horizon, rng)


class DatasetBandit(BanditTask):
    """Rows of a dataset served without replacement in a seeded order."""

    def __init__(self, features, horizon: int | None, rng: np.random.Generator | None):
        super().__init__()
        self.features = features
        n = features.shape[0]
        self.horizon = min(MAX_HORIZON, n) if horizon is None else min(horizon, n)
        rng = rng or np.random.default_rng()
        self.order = rng.permutation(n)[:self.horizon]
        self.context_dim = features.shape[1]
        self.row_index = None

    def _draw(self, t):
        i = int(self.order[t])
        self.row_index = i
        rewards = self._row_rewards(i)
        return self.features[i], rewards, rewards


class ClassificationBandit(DatasetBandit):
    """Each class is an action; the correct class pays 1, every other 0."""

    reward_kind = BERNOULLI
    reward_range = (0.0, 1.0)

    def __init__(self, features, labels, num_classes: int | None = None,
                 horizon: int | None = None, rng=None):
        super().__init__(features, horizon, rng)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.num_actions = int(num_classes or self.labels.max() + 1)

    def _row_rewards(self, i):
        out = np.zeros(self.num_actions)
        out[self.labels[i]] = 1.0
        return out


class RegressionBandit(DatasetBandit):
    """Per-action reward columns, already rescaled into [0, 1]."""

    reward_kind = CONTINUOUS
    reward_range = (0.0, 1.0)

    def __init__(self, features, rewards, horizon: int | None = None, rng=None):
        super().__init__(features, horizon, rng)
        self.table = np.asarray(rewards, dtype=np.float64)
        self.num_actions = self.table.shape[1]

    def _row_rewards(self, i):
        return self.table[i]


def _encode_features(frame: pd.DataFrame, categorical) -> np.ndarray:
    categorical = set(categorical or ())
    categorical |= {c for c in frame.columns if not pd.api.types.is_numeric_dtype(frame[c])}
    parts = []
    for col in frame.columns:
        if col in categorical:
            values = frame[col].astype(str)
            for cat in sorted(values.unique()):
                parts.append((values == cat).to_numpy(dtype=np.float64))
        else:
            parts.append(frame[col].to_numpy(dtype=np.float64))
    return np.column_stack(parts)


def _read_csv(path) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise TaskError(f"dataset not found: {path}")
    try:
        frame = pd.read_csv(path, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as err:
        raise TaskError(f"malformed CSV {path}: {err}") from err
    if frame.empty:
        raise TaskError(f"no rows in {path}")
    if frame.isna().any().any():
        raise TaskError(f"missing values in {path}")
    return frame


def _stamp(path):
    # cache key includes the modification time so edited files are re-read
    path = Path(path)
    if not path.is_file():
        raise TaskError(f"dataset not found: {path}")
    return str(path.resolve()), path.stat().st_mtime_ns


def load_classification(path, label_column=None, categorical=()):
    """Normalised feature matrix, integer labels and class names from a CSV."""
    return _load_classification(*_stamp(path), label_column, tuple(categorical))


def load_regression(path, reward_columns=None, categorical=()):
    """Normalised features and per-action rewards jointly rescaled to [0, 1]."""
    cols = tuple(reward_columns) if reward_columns else None
    return _load_regression(*_stamp(path), cols, tuple(categorical))


@lru_cache(maxsize=8)
def _load_classification(path, _mtime, label_column, categorical):
    frame = _read_csv(path)
    label_column = label_column or frame.columns[-1]
    if label_column not in frame.columns:
        raise TaskError(f"label column {label_column!r} not in {path}")
    classes = sorted(frame[label_column].astype(str).unique())
    lookup = {c: i for i, c in enumerate(classes)}
    labels = frame[label_column].astype(str).map(lookup).to_numpy(dtype=np.int64)
    features = minmax_normalize(_encode_features(frame.drop(columns=[label_column]), categorical))
    features.setflags(write=False)
    labels.setflags(write=False)
    return features, labels, tuple(classes)


@lru_cache(maxsize=8)
def _load_regression(path, _mtime, reward_columns, categorical):
    frame = _read_csv(path)
    if reward_columns is None:
        reward_columns = tuple(c for c in frame.columns if str(c).startswith("reward"))
    missing = [c for c in reward_columns if c not in frame.columns]
    if not reward_columns or missing:
        raise TaskError(f"reward columns missing from {path}: {missing or 'none declared'}")
    rewards = frame[list(reward_columns)].to_numpy(dtype=np.float64)
    lo, hi = rewards.min(), rewards.max()
    rewards = (rewards - lo) / (hi - lo) if hi > lo else np.zeros_like(rewards)
    features = minmax_normalize(_encode_features(frame.drop(columns=list(reward_columns)), categorical))
    features.setflags(write=False)
    rewards.setflags(write=False)
    return features, rewards


def make_task(name: str, source_path=None, seed: int | np.random.Generator | None = None,
              horizon: int | None = None, **options) -> BanditTask:
    """Build a task by name.

    ``wheel`` and ``two_context`` are synthetic. Classification names
    (``statlog``, ``adult``, ...) read a CSV with a label column (option
    ``label_column``, default the last column); regression names read a CSV
    with per-action reward columns (option ``reward_columns``, default every
    column whose name starts with ``reward``). ``categorical`` lists columns
    to one-hot encode; non-numeric columns are always encoded.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    categorical = tuple(options.pop("categorical", ()) or ())
    if name == "wheel":
        return WheelTask(WheelConfig(**options), horizon or MAX_HORIZON, rng)
    if name == "two_context":
        return two_context_task(horizon or 10_000, rng=rng, **options)
    if name in CLASSIFICATION_TASKS:
        if source_path is None:
            raise TaskError(f"task {name!r} needs a source CSV")
        features, labels, classes = load_classification(
            str(source_path), options.pop("label_column", None), categorical)
        if options:
            raise TaskError(f"unknown options for {name}: {sorted(options)}")
        return ClassificationBandit(features, labels, len(classes), horizon, rng)
    if name in REGRESSION_TASKS:
        if source_path is None:
            raise TaskError(f"task {name!r} needs a source CSV")
        cols = options.pop("reward_columns", None)
        features, rewards = load_regression(str(source_path), tuple(cols) if cols else None, categorical)
        if options:
            raise TaskError(f"unknown options for {name}: {sorted(options)}")
        return RegressionBandit(features, rewards, horizon, rng)
    raise TaskError(f"unknown task {name!r}")
