"""Gated linear networks with halfspace-gated geometric mixing neurons.

All weights of one network live in a single flat float64 buffer; layer ``i``
occupies a contiguous block viewed as ``(K_i, S, fan_in_i)``, one row per
(neuron, signature). Optional leading batch axes on the buffer stack
independent networks (one per action, or one per tree node) so a whole stack
is evaluated in one call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numba import njit
from scipy.special import expit, logit


class GlnError(ValueError):
    pass


@dataclass(frozen=True, eq=True)
class GlnConfig:
    input_dim: int
    layer_widths: tuple[int, ...] = (100, 10, 1)
    eps: float = 0.01
    beta: float = 0.2
    weight_bound: float = 50.0

    def __post_init__(self):
        object.__setattr__(self, "layer_widths", tuple(int(k) for k in self.layer_widths))
        if self.input_dim < 1:
            raise GlnError("input_dim must be positive")
        if not self.layer_widths or min(self.layer_widths) < 1 or self.layer_widths[-1] != 1:
            raise GlnError(f"layer widths must be positive and end in 1, got {self.layer_widths}")
        if not 0 < self.eps < 0.5:
            raise GlnError("eps must lie in (0, 0.5)")
        if not self.eps <= self.beta <= 1 - self.eps or self.beta == 0.5:
            raise GlnError("beta must lie in [eps, 1 - eps] and differ from 0.5")
        if not 10 < self.weight_bound < 100:
            raise GlnError("weight_bound must lie in (10, 100)")

    @property
    def fan_ins(self) -> list[int]:
        prev = [self.input_dim] + list(self.layer_widths[:-1])
        return [k + 1 for k in prev]

    @property
    def num_units(self) -> int:
        return sum(self.layer_widths)

    @property
    def unit_slices(self) -> list[slice]:
        ends = np.cumsum((0,) + self.layer_widths)
        return [slice(int(a), int(b)) for a, b in zip(ends[:-1], ends[1:])]

    @cached_property
    def _kernel_shape(self):
        return (np.asarray(self.layer_widths, dtype=np.int64),
                np.asarray(self.fan_ins, dtype=np.int64),
                math.log(self.beta / (1.0 - self.beta)))

    def layer_sizes(self, num_signatures: int) -> list[int]:
        return [k * num_signatures * f for k, f in zip(self.layer_widths, self.fan_ins)]


class GlnParams:
    """Weights of one network, or of a stack of networks sharing a config."""

    def __init__(self, config: GlnConfig, num_signatures: int, buffer: np.ndarray):
        self.config = config
        self.num_signatures = int(num_signatures)
        sizes = config.layer_sizes(self.num_signatures)
        if buffer.shape[-1] != sum(sizes):
            raise GlnError(f"buffer holds {buffer.shape[-1]} weights, config needs {sum(sizes)}")
        self.buffer = buffer
        offsets = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
        self._offsets = offsets

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.buffer.shape[:-1]

    @property
    def weights(self) -> list[np.ndarray]:
        """Per-layer views of shape ``(*batch, K_i, S, fan_in_i)``."""
        out = []
        s = self.num_signatures
        for i, (k, f) in enumerate(zip(self.config.layer_widths, self.config.fan_ins)):
            block = self.buffer[..., self._offsets[i]:self._offsets[i + 1]]
            out.append(block.reshape(self.batch_shape + (k, s, f)))
        return out

    def __getitem__(self, idx) -> "GlnParams":
        """View of a sub-stack (basic indexing only); writes go through."""
        if not isinstance(idx, tuple):
            idx = (idx,)
        if any(not isinstance(i, (int, np.integer, slice)) for i in idx):
            raise GlnError("only integer and slice indexing is supported")
        if len(idx) > len(self.batch_shape):
            raise GlnError("too many indices for this stack")
        return GlnParams(self.config, self.num_signatures, self.buffer[idx])

    def copy(self) -> "GlnParams":
        return GlnParams(self.config, self.num_signatures, self.buffer.copy())

    def equals(self, other: "GlnParams") -> bool:
        return (self.config == other.config and self.num_signatures == other.num_signatures
                and np.array_equal(self.buffer, other.buffer))


def clip_prob(p, eps):
    return np.clip(p, eps, 1.0 - eps)


def geometric_mix(w, p, eps: float = 0.01) -> float:
    """Clipped ``sigmoid(w . logit(p))``."""
    w = np.asarray(w, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if w.shape != p.shape:
        raise GlnError(f"weight/prediction length mismatch: {w.shape} vs {p.shape}")
    return float(clip_prob(expit(np.dot(w, logit(p))), eps))


def init_params(config: GlnConfig, num_signatures: int, batch_shape=()) -> GlnParams:
    """Every row equal to ``1 / fan_in`` so each neuron starts as a plain average."""
    batch_shape = tuple(batch_shape)
    parts = [np.full(size, 1.0 / f) for size, f in
             zip(config.layer_sizes(num_signatures), config.fan_ins)]
    flat = np.concatenate(parts)
    buffer = np.empty(batch_shape + flat.shape)
    buffer[...] = flat
    return GlnParams(config, num_signatures, buffer)


def base_logits(config: GlnConfig, x) -> np.ndarray:
    """Layer-0 logits: the bias prediction followed by the clipped context."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != config.input_dim:
        raise GlnError(f"context has shape {x.shape}, network expects ({config.input_dim},)")
    z = np.empty(config.input_dim + 1)
    z[0] = config._kernel_shape[2]
    p = np.clip(x, config.eps, 1.0 - config.eps)
    z[1:] = np.log(p / (1.0 - p))
    return z


@njit(cache=True)
def _pass(buf, sig, z0, widths, fan_ins, offsets, num_sig, eps, beta_logit, bound,
          targets, lr, trace):
    # targets[n] < 0 means network n is evaluated but not trained
    nb = buf.shape[0]
    out = np.empty(nb)
    for n in range(nb):
        sn = n if sig.shape[0] > 1 else 0
        target = targets[n] if targets.shape[0] > 1 else targets[0]
        zprev = z0.copy()
        unit = 0
        p = 0.5
        for layer in range(widths.shape[0]):
            k_count = widths[layer]
            fan = fan_ins[layer]
            base = offsets[layer]
            znew = np.empty(k_count + 1)
            znew[0] = beta_logit
            for k in range(k_count):
                s = sig[sn, unit]
                if s < 0 or s >= num_sig:
                    raise ValueError("signature out of range")
                row = base + (k * num_sig + s) * fan
                a = 0.0
                for f in range(fan):
                    a += buf[n, row + f] * zprev[f]
                p = 1.0 / (1.0 + np.exp(-a))
                if p < eps:
                    p = eps
                elif p > 1.0 - eps:
                    p = 1.0 - eps
                if target >= 0.0:
                    g = -lr * (p - target)
                    for f in range(fan):
                        w = buf[n, row + f] + g * zprev[f]
                        if w > bound:
                            w = bound
                        elif w < -bound:
                            w = -bound
                        buf[n, row + f] = w
                if trace.shape[0] > 0:
                    trace[unit] += 1
                znew[k + 1] = np.log(p / (1.0 - p))
                unit += 1
            zprev = znew
        out[n] = p
    return out


_NO_TRACE = np.zeros(0, dtype=np.int64)


def _run(params: GlnParams, sig, x, targets, lr, trace=None):
    cfg = params.config
    sig = np.asarray(sig, dtype=np.int64)
    if sig.shape[-1] != cfg.num_units:
        raise GlnError(f"signature vector has {sig.shape[-1]} entries, network has {cfg.num_units} units")
    batch = params.batch_shape
    nb = math.prod(batch)
    if not params.buffer.flags.c_contiguous:
        raise GlnError("parameter buffer must be C-contiguous")
    buf = params.buffer.reshape(nb, -1)
    sig = sig.reshape(1, -1) if sig.ndim == 1 else np.ascontiguousarray(
        np.broadcast_to(sig, batch + (cfg.num_units,))).reshape(nb, -1)
    targets = np.asarray(targets, dtype=np.float64)
    targets = targets.reshape(1) if targets.ndim == 0 else np.ascontiguousarray(
        np.broadcast_to(targets, batch)).reshape(nb)
    widths, fan_ins, beta_logit = cfg._kernel_shape
    out = _pass(buf, sig, base_logits(cfg, x), widths, fan_ins, params._offsets,
                params.num_signatures, cfg.eps, beta_logit, cfg.weight_bound, targets,
                float(lr), _NO_TRACE if trace is None else trace)
    return float(out[0]) if not batch else out.reshape(batch)


def forward(params: GlnParams, sig, x):
    """Prediction of ``P[r = 1 | x]`` for every network in the stack; pure."""
    return _run(params, sig, x, -1.0, 0.0)


def forward_update(params: GlnParams, sig, x, target, lr: float, trace=None):
    """Predict, then take one projected online-gradient step on each active row.

    Returns the prediction made with the pre-update weights. ``params`` is
    modified in place and only the rows selected by ``sig`` change. ``target``
    may be an array over the stack; entries of ``-1`` leave that network
    untouched. ``trace``, if given, is an int64 array of length ``U`` that
    counts neuron evaluations.
    """
    if lr <= 0:
        raise GlnError("learning rate must be positive")
    target = np.asarray(target, dtype=np.float64)
    if target.ndim == 0:
        if target not in (0.0, 1.0):
            raise GlnError("targets must be 0 or 1")
    elif np.any((target != 0) & (target != 1) & (target != -1)):
        raise GlnError("targets must be 0 or 1")
    return _run(params, sig, x, target, lr, trace)
