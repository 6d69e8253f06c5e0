"""Signature-action counts and the soft-min pseudocount built from them."""
from __future__ import annotations

import math

import numpy as np

# above this many (unit, signature, action) cells the table switches to a dict
DENSE_LIMIT = 1 << 24


class CountTable:
    """Exact counts ``N(s_u, a)`` for every unit ``u``, plus per-action pulls.

    Storage is a dense ``(U, S, A)`` integer array when that is small enough,
    otherwise a sparse dict keyed by ``(u, s, a)``. Both give identical
    answers.
    """

    def __init__(self, num_units: int, num_signatures: int, num_actions: int,
                 sparse: bool | None = None):
        self.num_units = int(num_units)
        self.num_signatures = int(num_signatures)
        self.num_actions = int(num_actions)
        if sparse is None:
            sparse = self.num_units * self.num_signatures * self.num_actions > DENSE_LIMIT
        self.sparse = sparse
        self.pulls = np.zeros(self.num_actions, dtype=np.int64)
        self.step = 0
        self._units = np.arange(self.num_units)
        if sparse:
            self._cells: dict[tuple[int, int, int], int] = {}
        else:
            self._dense = np.zeros((self.num_units, self.num_signatures, self.num_actions),
                                   dtype=np.int64)

    def _check(self, sig, a=None):
        sig = np.asarray(sig, dtype=np.int64)
        if sig.shape != (self.num_units,):
            raise ValueError(f"signature vector has shape {sig.shape}, expected ({self.num_units},)")
        if a is not None and not 0 <= a < self.num_actions:
            raise IndexError(f"action {a} out of range for {self.num_actions} actions")
        return sig

    def increment(self, sig, a: int) -> None:
        sig = self._check(sig, a)
        if self.sparse:
            for u, s in enumerate(sig.tolist()):
                key = (u, s, a)
                self._cells[key] = self._cells.get(key, 0) + 1
        else:
            self._dense[self._units, sig, a] += 1
        self.pulls[a] += 1
        self.step += 1

    def unit_counts(self, sig, a: int | None = None) -> np.ndarray:
        """``N(s_u, a)`` per unit: shape ``(U,)`` for one action, ``(U, A)`` for all."""
        sig = self._check(sig, a)
        if not self.sparse:
            if a is None:
                return self._dense[self._units, sig, :]
            return self._dense[self._units, sig, a]
        actions = range(self.num_actions) if a is None else [a]
        out = np.array([[self._cells.get((u, s, b), 0) for b in actions]
                        for u, s in enumerate(sig.tolist())], dtype=np.int64)
        return out if a is None else out[:, 0]

    def total(self, u: int, a: int) -> int:
        """Sum of unit ``u``'s counts over all signatures for action ``a``."""
        if self.sparse:
            return sum(n for (uu, _, b), n in self._cells.items() if uu == u and b == a)
        return int(self._dense[u, :, a].sum())

    def state(self) -> dict[str, np.ndarray]:
        if self.sparse:
            keys = np.array(sorted(self._cells), dtype=np.int64).reshape(-1, 3)
            vals = np.array([self._cells[tuple(k)] for k in keys.tolist()], dtype=np.int64)
            cells = np.concatenate([keys, vals[:, None]], axis=1)
        else:
            idx = np.argwhere(self._dense)
            cells = np.concatenate([idx, self._dense[tuple(idx.T)][:, None]], axis=1)
        return {
            "shape": np.array([self.num_units, self.num_signatures, self.num_actions]),
            "cells": cells.astype(np.int64),
            "pulls": self.pulls.copy(),
            "step": np.array(self.step),
        }

    @classmethod
    def from_state(cls, state, sparse: bool | None = None) -> "CountTable":
        u, s, a = (int(v) for v in state["shape"])
        table = cls(u, s, a, sparse=sparse)
        for uu, ss, aa, n in np.asarray(state["cells"]).tolist():
            if table.sparse:
                table._cells[(uu, ss, aa)] = n
            else:
                table._dense[uu, ss, aa] = n
        table.pulls = np.array(state["pulls"], dtype=np.int64)
        table.step = int(state["step"])
        return table


def increment(table: CountTable, sig, a: int) -> None:
    table.increment(sig, a)


def soft_min_count(counts, t: float):
    """Soft-min with temperature ``-ln t`` over axis 0 of ``counts``.

    Works column-wise on a ``(U, A)`` array. Columns whose largest count is
    zero give 0.
    """
    n = np.asarray(counts, dtype=np.float64)
    n_max = n.max(axis=0)
    safe = np.where(n_max > 0, n_max, 1.0)
    w = np.exp(-math.log(t) * (n / safe))
    out = (w * n).sum(axis=0) / w.sum(axis=0)
    # rounding guards: equal counts give the count itself, never leave [min, max]
    n_min = n.min(axis=0)
    out = np.where(n_min == n_max, n_max, np.clip(out, n_min, n_max))
    return np.where(n_max > 0, out, 0.0)


def pseudocount(table: CountTable, sig, a: int, t: float) -> float:
    if t < 1:
        raise ValueError("t must be at least 1")
    return float(soft_min_count(table.unit_counts(sig, a), t))


def exploration_bonus(t: float, nhat: float, c: float) -> float:
    """UCB-style bonus ``c * sqrt(ln t / nhat)``; infinite when ``nhat`` is 0."""
    if nhat <= 0:
        return math.inf
    return c * math.sqrt(math.log(t) / nhat)
