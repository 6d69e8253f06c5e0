"""
Halfspace gating and a single gated linear network
===================================================

A GLN never learns features. Each neuron picks one weight row per context,
chosen by which side of a few random hyperplanes the context lies on, and
mixes its inputs' probabilities geometrically.
"""
import numpy as np

from gatedbandit import GlnConfig, forward, forward_update, init_params, sample_gating, total_signature

rng = np.random.default_rng(0)

# 2-d contexts, a [20, 5, 1] network, 4 planes per neuron -> 16 weight rows each
cfg = GlnConfig(input_dim=2, layer_widths=(20, 5, 1))
gates = sample_gating(2, cfg.num_units, planes_per_unit=4, bias_scale=0.05, rng=rng)
params = init_params(cfg, gates.num_signatures)
print("neurons:", cfg.num_units, "signatures per neuron:", gates.num_signatures)

# a context's total signature: one integer per neuron
x = np.array([0.2, 0.9])
print("signature of", x, "->", total_signature(gates, x)[:8], "...")

# fresh weights average the inputs, so the output starts near 0.5
print("initial prediction:", forward(params, total_signature(gates, x), x))

# target: 1 inside a disc around (0.5, 0.5), 0 outside
def label(x):
    return float(np.hypot(*(x - 0.5)) < 0.3)

for n in range(20_000):
    x = rng.random(2)
    forward_update(params, total_signature(gates, x), x, label(x), lr=max(0.5 / (1 + 0.01 * n), 0.02))

grid = np.linspace(0.05, 0.95, 7)
print("\npredicted P(inside) on a grid (rows = y, cols = x)")
for y in grid[::-1]:
    row = [forward(params, total_signature(gates, np.array([x_, y])), np.array([x_, y])) for x_ in grid]
    print(" ".join(f"{p:4.2f}" for p in row))
