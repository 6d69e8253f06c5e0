"""Gated linear contextual bandits: halfspace-gated GLN reward estimators with
pseudocount exploration, a GLN tree for bounded continuous rewards, and a
seeded benchmark harness."""

from .baselines import LinearPosterior, LinearTSPolicy, UniformPolicy
from .ctree import RewardTree, expected_reward, make_tree, midpoints, target_path, tree_update
from .envs import WheelConfig, make_task, minmax_normalize
from .gating import GatingSet, sample_gating, total_signature, unit_signature
from .glcb import GlcbAgent, GlcbConfig, schedule
from .gln import GlnConfig, GlnParams, forward, forward_update, geometric_mix, init_params
from .pseudocount import CountTable, exploration_bonus, pseudocount

__version__ = "0.1.0"
