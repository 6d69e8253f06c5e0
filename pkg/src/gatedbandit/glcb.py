"""The GLCB policy: per-action GLN (or GLN-tree) reward estimates plus a
pseudocount-driven UCB bonus."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .ctree import RewardTree, expected_reward, path_expectation, tree_update
from .gating import GatingSet, concat_gatings, sample_gating, total_signature
from .gln import GlnConfig, GlnParams, forward, forward_update, init_params
from .pseudocount import CountTable, exploration_bonus, soft_min_count

BERNOULLI = "bernoulli"
CONTINUOUS = "continuous"
REWARD_TOLERANCE = 1e-9

# long-form hyperparameter names accepted in configs -> config fields
TABLE_KEYS = {
    "GLN network shape": "layer_widths",
    "number of hyperplanes per unit": "planes_per_unit",
    "UCB exploration bonus": "exploration_c",
    "bias scale": "bias_scale",
    "initial learning rate": "lr_init",
    "learning rate decay parameter": "lr_decay",
    "initial switching rate": "switch_init",
    "switching rate decay parameter": "switch_decay",
    "tree depth": "depth",
}


def schedule(initial: float, decay: float, n: int) -> float:
    """``initial / (1 + decay * n)``."""
    if initial <= 0:
        raise ValueError("initial value must be positive")
    if decay < 0:
        raise ValueError("decay must be nonnegative")
    return initial / (1.0 + decay * n)


@dataclass(frozen=True)
class GlcbConfig:
    mode: str = BERNOULLI
    exploration_c: float = 0.03
    lr_init: float = 0.1
    lr_decay: float = 0.1
    switch_init: float = 10.0
    switch_decay: float = 1.0
    layer_widths: tuple[int, ...] = (100, 10, 1)
    planes_per_unit: int = 8
    bias_scale: float = 0.05
    gate_centering: str = "cube"
    eps: float = 0.01
    beta: float = 0.2
    weight_bound: float = 50.0
    depth: int = 3
    r_min: float = 0.0
    r_max: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "layer_widths", tuple(int(k) for k in self.layer_widths))
        if self.mode not in (BERNOULLI, CONTINUOUS):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.exploration_c < 0:
            raise ValueError("exploration constant must be nonnegative")
        if self.lr_init <= 0 or self.lr_decay < 0:
            raise ValueError("bad learning-rate schedule")
        if self.planes_per_unit < 1 or self.bias_scale < 0:
            raise ValueError("bad gating hyperparameters")
        if self.mode == CONTINUOUS and not self.r_min < self.r_max:
            raise ValueError("continuous mode needs r_min < r_max")

    @classmethod
    def defaults(cls, mode: str = BERNOULLI, **overrides) -> "GlcbConfig":
        """Default hyperparameters for each reward mode, with overrides."""
        if mode == BERNOULLI:
            base = cls()
        elif mode == CONTINUOUS:
            base = cls(mode=CONTINUOUS, exploration_c=0.1, lr_init=1.0, lr_decay=0.01,
                       switch_init=1.0, switch_decay=0.1, planes_per_unit=2, bias_scale=0.001,
                       depth=3)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        return replace(base, **overrides)

    @classmethod
    def from_mapping(cls, data: dict) -> "GlcbConfig":
        """Build from a dict keyed by field names or hyperparameter-table row names."""
        data = {TABLE_KEYS.get(k, k): v for k, v in data.items()}
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown GLCB config keys: {sorted(unknown)}")
        return cls.defaults(data.pop("mode", BERNOULLI), **data)

    def gln_config(self, input_dim: int) -> GlnConfig:
        return GlnConfig(input_dim, self.layer_widths, self.eps, self.beta, self.weight_bound)


class GlcbAgent:
    """GLCB agent over a fixed action set.

    All action estimators share one set of gating functions, so the total
    signature is computed once per step. In continuous mode every action owns
    a reward tree; node ``i`` of every tree uses the same gating set, and
    counts aggregate over the units of all nodes.
    """

    def __init__(self, num_actions: int, context_dim: int, config: GlcbConfig | None = None,
                 rng: np.random.Generator | int | None = None):
        if num_actions < 1:
            raise ValueError("need at least one action")
        self.config = config = config or GlcbConfig()
        self.num_actions = num_actions
        self.context_dim = context_dim
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        self.gln_config = config.gln_config(context_dim)
        num_sig = 1 << config.planes_per_unit
        units = self.gln_config.num_units
        if config.mode == BERNOULLI:
            self.gating = sample_gating(context_dim, units, config.planes_per_unit,
                                        config.bias_scale, self.rng, config.gate_centering)
            self.params = init_params(self.gln_config, num_sig, (num_actions,))
            self.trees = None
            self._views = [self.params[a] for a in range(num_actions)]
        else:
            n = (1 << config.depth) - 1
            self.gating = concat_gatings(
                sample_gating(context_dim, units, config.planes_per_unit, config.bias_scale,
                              self.rng, config.gate_centering)
                for _ in range(n))
            self.params = init_params(self.gln_config, num_sig, (num_actions, n))
            self.trees = [RewardTree(config.depth, config.r_min, config.r_max, self.gating, self.params[a])
                          for a in range(num_actions)]
        self.counts = CountTable(self.gating.num_units, num_sig, num_actions)
        self.t = 0
        self._last_sig = None

    @property
    def step(self) -> int:
        """Index of the step about to be played (1-based)."""
        return self.t + 1

    def signature(self, x) -> np.ndarray:
        # select_action and observe usually see the same context back to back
        x = np.asarray(x, dtype=np.float64)
        key = (x.shape, x.tobytes())
        if self._last_sig is None or self._last_sig[0] != key:
            sig = total_signature(self.gating, x)
            sig.setflags(write=False)
            self._last_sig = (key, sig)
        return self._last_sig[1]

    def values(self, x, sig=None) -> np.ndarray:
        """Estimated expected reward of every action."""
        if sig is None:
            sig = self.signature(x)
        if self.trees is None:
            return forward(self.params, sig, x)
        q = forward(self.params, sig.reshape(len(self.trees[0].midpoints) - 1, -1), x)
        return path_expectation(q, self.config.depth, self.trees[0].midpoints)

    def bonuses(self, sig) -> np.ndarray:
        t = self.step
        nhat = soft_min_count(self.counts.unit_counts(sig), max(t - 1, 1))
        return np.array([exploration_bonus(t, n, self.config.exploration_c) for n in nhat])

    def scores(self, x):
        """``(values, bonuses)``; infinite bonuses mark actions with no pseudocount."""
        sig = self.signature(x)
        return self.values(x, sig), self.bonuses(sig)

    def select_action(self, x) -> int:
        values, bonuses = self.scores(x)
        return argmax_with_sentinel(values, bonuses)

    def learning_rate(self, a: int) -> float:
        return schedule(self.config.lr_init, self.config.lr_decay, int(self.counts.pulls[a]))

    def switching_rate(self, a: int) -> float:
        # the schedule is tracked for config round-trips; nothing consumes it
        return schedule(self.config.switch_init, self.config.switch_decay, int(self.counts.pulls[a]))

    def check_reward(self, r: float) -> float:
        r = float(r)
        if self.config.mode == BERNOULLI:
            if r not in (0.0, 1.0):
                raise ValueError(f"Bernoulli reward must be 0 or 1, got {r}")
            return r
        lo, hi = self.config.r_min, self.config.r_max
        if not lo - REWARD_TOLERANCE <= r <= hi + REWARD_TOLERANCE:
            raise ValueError(f"reward {r} outside [{lo}, {hi}]")
        return min(max(r, lo), hi)

    def observe(self, x, a: int, r: float) -> None:
        if not 0 <= a < self.num_actions:
            raise IndexError(f"action {a} out of range")
        r = self.check_reward(r)
        sig = self.signature(x)
        lr = self.learning_rate(a)
        if self.trees is None:
            forward_update(self._views[a], sig, x, r, lr)
        else:
            tree = self.trees[a]
            tree_update(tree, x, r, lr, sig.reshape(tree.num_nodes, -1))
        self.counts.increment(sig, a)
        self.t += 1

    def expected_reward(self, x, a: int) -> float:
        if self.trees is None:
            return forward(self._views[a], self.signature(x), x)
        return expected_reward(self.trees[a], x)

    def save(self, path) -> None:
        counts = self.counts.state()
        meta = {
            "version": 1,
            "num_actions": self.num_actions,
            "context_dim": self.context_dim,
            "t": self.t,
            "config": asdict(self.config),
        }
        np.savez(path, meta=np.array(json.dumps(meta)), normals=self.gating.normals,
                 offsets=self.gating.offsets, params=self.params.buffer,
                 rng_state=np.array(json.dumps(self.rng.bit_generator.state)),
                 **{f"counts_{k}": v for k, v in counts.items()})

    @classmethod
    def load(cls, path) -> "GlcbAgent":
        with np.load(path) as data:
            meta = json.loads(str(data["meta"]))
            if meta.get("version") != 1:
                raise ValueError(f"unsupported agent snapshot version {meta.get('version')!r}")
            config = GlcbConfig(**meta["config"])
            agent = cls.__new__(cls)
            agent.config = config
            agent.num_actions = meta["num_actions"]
            agent.context_dim = meta["context_dim"]
            agent.gln_config = config.gln_config(agent.context_dim)
            agent.gating = GatingSet(data["normals"], data["offsets"])
            agent.params = GlnParams(agent.gln_config, 1 << config.planes_per_unit,
                                     np.ascontiguousarray(data["params"]))
            agent.rng = np.random.default_rng()
            agent.rng.bit_generator.state = json.loads(str(data["rng_state"]))
            agent.counts = CountTable.from_state(
                {k[len("counts_"):]: data[k] for k in data.files if k.startswith("counts_")})
            agent.t = meta["t"]
            agent._last_sig = None
        if config.mode == BERNOULLI:
            agent.trees = None
            agent._views = [agent.params[a] for a in range(agent.num_actions)]
        else:
            agent.trees = [RewardTree(config.depth, config.r_min, config.r_max, agent.gating,
                                      agent.params[a]) for a in range(agent.num_actions)]
        return agent


def argmax_with_sentinel(values, bonuses) -> int:
    """Index maximising ``values + bonuses``, lowest index on ties.

    Infinite bonuses win outright and are never added to anything.
    """
    bonuses = np.asarray(bonuses, dtype=np.float64)
    inf = np.flatnonzero(np.isinf(bonuses))
    if inf.size:
        return int(inf[0])
    return int(np.argmax(np.asarray(values, dtype=np.float64) + bonuses))
