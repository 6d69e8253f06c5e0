"""
Regression with a tree of GLNs
==============================

A depth-D tree splits [r_min, r_max] into 2**D bins. Each internal node is
a GLN predicting "right half?", and the expected reward is the bin
midpoints weighted by path probabilities.
"""
import numpy as np

from gatedbandit import GlnConfig, schedule
from gatedbandit.ctree import all_leaves, expected_reward, leaf_distribution, make_tree, tree_update

rng = np.random.default_rng(2)
tree = make_tree(GlnConfig(2), depth=3, r_min=0.0, r_max=1.0,
                 planes_per_unit=2, bias_scale=0.001, rng=rng)
print("bin midpoints:", tree.midpoints)

x = np.array([0.4, 0.6])
sig = tree.signatures(x)
draws = rng.beta(2, 5, size=10_000)
for n, r in enumerate(draws):
    tree_update(tree, x, r, schedule(1.0, 0.01, n), sig=sig)

hist = np.histogram(draws, bins=8, range=(0, 1))[0] / len(draws)
for leaf, p, h in zip(all_leaves(3), leaf_distribution(tree, x), hist):
    print(f"leaf {leaf}: model {p:.3f}  data {h:.3f}")
print(f"expected reward {expected_reward(tree, x):.4f}, Beta(2,5) mean {2 / 7:.4f}")
