"""Regression over a bounded reward range with a binary tree of GLNs.

The range ``[r_min, r_max]`` is cut into ``2**depth`` equal bins. Each
internal node holds a GLN predicting whether the reward falls in its right
half. Nodes are stored in heap order: the root (empty address) is index 0
and the children of node ``i`` are ``2i + 1`` (left, bit 0) and ``2i + 2``
(right, bit 1). Leaf strings are read most-significant bit first.
"""
from __future__ import annotations

import itertools

import numpy as np

from .gating import GatingSet, concat_gatings, sample_gating, total_signature
from .gln import GlnConfig, GlnParams, forward, forward_update, init_params

MAX_DEPTH = 6


class TreeError(ValueError):
    pass


def midpoints(depth: int, r_min: float, r_max: float) -> np.ndarray:
    if depth < 1:
        raise TreeError("depth must be at least 1")
    if not r_min < r_max:
        raise TreeError(f"empty reward range [{r_min}, {r_max}]")
    k = np.arange(1 << depth)
    return r_min + (k + 0.5) * (r_max - r_min) / (1 << depth)


def node_index(address: str) -> int:
    if any(c not in "01" for c in address):
        raise TreeError(f"bad node address {address!r}")
    return int("1" + address, 2) - 1


def _check_leaf(b: str, depth: int) -> str:
    if len(b) != depth or any(c not in "01" for c in b):
        raise TreeError(f"leaf string must be {depth} binary digits, got {b!r}")
    return b


class RewardTree:
    """A depth-``D`` tree of ``2**D - 1`` GLNs over one reward range.

    ``gating`` concatenates the per-node gating sets (node ``i`` owns units
    ``i*U .. (i+1)*U - 1``); ``params`` is a stack of shape ``(2**D - 1,)``.
    """

    def __init__(self, depth: int, r_min: float, r_max: float, gating: GatingSet,
                 params: GlnParams):
        if not 1 <= depth <= MAX_DEPTH:
            raise TreeError(f"depth must lie in [1, {MAX_DEPTH}]")
        self.depth = depth
        self.r_min = float(r_min)
        self.r_max = float(r_max)
        self.midpoints = midpoints(depth, r_min, r_max)
        self.midpoints.setflags(write=False)
        n = self.num_nodes
        if params.batch_shape != (n,):
            raise TreeError(f"expected a stack of {n} node networks, got {params.batch_shape}")
        if gating.num_units != n * params.config.num_units:
            raise TreeError("gating must provide one unit per neuron of every node")
        self.gating = gating
        self.params = params

    @property
    def num_nodes(self) -> int:
        return (1 << self.depth) - 1

    @property
    def node_gating(self) -> list[GatingSet]:
        u = self.params.config.num_units
        return [GatingSet(self.gating.normals[i * u:(i + 1) * u], self.gating.offsets[i * u:(i + 1) * u])
                for i in range(self.num_nodes)]

    def signatures(self, x) -> np.ndarray:
        return total_signature(self.gating, x).reshape(self.num_nodes, -1)

    def node_outputs(self, x, sig=None) -> np.ndarray:
        if sig is None:
            sig = self.signatures(x)
        return forward(self.params, sig, x)


def make_tree(config: GlnConfig, depth: int, r_min: float, r_max: float,
              planes_per_unit: int, bias_scale: float, rng: np.random.Generator,
              centering: str = "cube") -> RewardTree:
    """Fresh tree with an independent gating set per internal node."""
    n = (1 << depth) - 1
    gatings = [sample_gating(config.input_dim, config.num_units, planes_per_unit, bias_scale, rng,
                             centering)
               for _ in range(n)]
    params = init_params(config, 1 << planes_per_unit, (n,))
    return RewardTree(depth, r_min, r_max, concat_gatings(gatings), params)


def path_expectation(q, depth: int, values) -> np.ndarray:
    """``sum_b P(b) * values[dec(b)]`` given node outputs ``q`` (last axis, heap order).

    Accumulates path products level by level, touching each node once.
    Leading axes of ``q`` are carried through.
    """
    q = np.asarray(q, dtype=np.float64)
    lead = q.shape[:-1]
    probs = np.ones(lead + (1,))
    for d in range(depth):
        qd = q[..., (1 << d) - 1:(1 << (d + 1)) - 1]
        probs = np.stack([probs * (1.0 - qd), probs * qd], axis=-1).reshape(lead + (1 << (d + 1),))
    return probs @ np.asarray(values, dtype=np.float64)


def leaf_probability(tree: RewardTree, x, b: str, sig=None) -> float:
    """``P(b | x)``: product of node outputs (bit 1) or their complements (bit 0)."""
    _check_leaf(b, tree.depth)
    q = tree.node_outputs(x, sig)
    p = 1.0
    for i, bit in enumerate(b):
        out = q[node_index(b[:i])]
        p *= out if bit == "1" else 1.0 - out
    return p


def leaf_distribution(tree: RewardTree, x, sig=None) -> np.ndarray:
    """All ``2**D`` leaf probabilities, indexed by ``dec(b)``."""
    eye = np.eye(1 << tree.depth)
    return path_expectation(tree.node_outputs(x, sig), tree.depth, eye)


def expected_reward(tree: RewardTree, x, sig=None) -> float:
    return float(path_expectation(tree.node_outputs(x, sig), tree.depth, tree.midpoints))


def target_path(r: float, tree: RewardTree) -> str:
    """Bin of ``r`` as a ``D``-digit big-endian binary string."""
    if not tree.r_min <= r <= tree.r_max:
        raise TreeError(f"reward {r} outside [{tree.r_min}, {tree.r_max}]")
    n_bins = 1 << tree.depth
    k = min(int(np.floor((r - tree.r_min) / (tree.r_max - tree.r_min) * n_bins)), n_bins - 1)
    return format(k, f"0{tree.depth}b")


def tree_update(tree: RewardTree, x, r: float, lr: float, sig=None) -> None:
    """Train the ``D`` nodes on the path to ``r``'s bin; other nodes are untouched."""
    b = target_path(r, tree)
    targets = np.full(tree.num_nodes, -1.0)
    for i, bit in enumerate(b):
        targets[node_index(b[:i])] = float(bit)
    if sig is None:
        sig = tree.signatures(x)
    forward_update(tree.params, sig, x, targets, lr)


def all_leaves(depth: int) -> list[str]:
    return ["".join(bits) for bits in itertools.product("01", repeat=depth)]
