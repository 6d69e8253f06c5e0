"""Random halfspace gating.

Every gating unit owns ``H`` fixed hyperplanes. A context is mapped to a
signature in ``{0, ..., 2**H - 1}`` whose bit ``i`` is set when the context
lies on the non-negative side of plane ``i`` (plane 0 is the least
significant bit).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np


class GatingError(ValueError):
    pass


@dataclass(frozen=True)
class Hyperplane:
    normal: np.ndarray
    offset: float

    def side(self, x) -> bool:
        return bool(np.dot(self.normal, x) >= self.offset)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GatingUnit:
    normals: np.ndarray  # (H, d)
    offsets: np.ndarray  # (H,)

    def __post_init__(self):
        object.__setattr__(self, "normals", _frozen(np.atleast_2d(self.normals)))
        object.__setattr__(self, "offsets", _frozen(np.atleast_1d(self.offsets)))
        if self.normals.shape[0] != self.offsets.shape[0]:
            raise GatingError("one offset per hyperplane required")

    @classmethod
    def from_planes(cls, planes) -> "GatingUnit":
        return cls(np.stack([p.normal for p in planes]), np.array([p.offset for p in planes]))

    @property
    def planes(self) -> list[Hyperplane]:
        return [Hyperplane(n, float(o)) for n, o in zip(self.normals, self.offsets)]

    @property
    def num_signatures(self) -> int:
        return 1 << self.normals.shape[0]


@dataclass(frozen=True, eq=False)
class GatingSet:
    """``U`` gating units over contexts of dimension ``dim``.

    Stored as dense arrays: ``normals`` has shape ``(U, H, dim)`` and
    ``offsets`` shape ``(U, H)``.
    """

    normals: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        normals = _frozen(self.normals)
        offsets = _frozen(self.offsets)
        if normals.ndim != 3 or offsets.shape != normals.shape[:2]:
            raise GatingError(f"bad gating shapes {normals.shape} / {offsets.shape}")
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)
        weights = (1 << np.arange(normals.shape[1])).astype(np.int64)
        object.__setattr__(self, "_bit_weights", weights)

    @property
    def dim(self) -> int:
        return self.normals.shape[2]

    @property
    def num_units(self) -> int:
        return self.normals.shape[0]

    @property
    def planes_per_unit(self) -> int:
        return self.normals.shape[1]

    @property
    def num_signatures(self) -> int:
        return 1 << self.planes_per_unit

    @property
    def units(self) -> list[GatingUnit]:
        return [GatingUnit(n, o) for n, o in zip(self.normals, self.offsets)]

    def __eq__(self, other):
        if not isinstance(other, GatingSet):
            return NotImplemented
        return np.array_equal(self.normals, other.normals) and np.array_equal(
            self.offsets, other.offsets
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": 1,
            "dim": self.dim,
            "normals": self.normals.tolist(),
            "offsets": self.offsets.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "GatingSet":
        if data.get("version") != 1:
            raise GatingError(f"unsupported gating snapshot version {data.get('version')!r}")
        normals = np.asarray(data["normals"], dtype=np.float64)
        gset = cls(normals.reshape(len(normals), -1, data["dim"]), data["offsets"])
        return gset


def sample_gating(dim: int, units: int, planes_per_unit: int, bias_scale: float,
                  rng: np.random.Generator, centering: str = "cube") -> GatingSet:
    """Draw ``units`` gating units with uniformly random unit normals.

    With ``centering="cube"`` offsets are ``normal . c + zeta`` where
    ``c = (1/2, ..., 1/2)`` and ``zeta ~ N(0, bias_scale**2)``, so every plane
    passes close to the centre of ``[0, 1]**dim``. ``centering="literal"``
    draws offsets from ``N(dim / 2, bias_scale**2)`` instead.
    """
    if dim < 1 or units < 1 or planes_per_unit < 1:
        raise GatingError("dim, units and planes_per_unit must be positive")
    if bias_scale < 0:
        raise GatingError("bias_scale must be nonnegative")
    normals = rng.standard_normal((units, planes_per_unit, dim))
    norms = np.linalg.norm(normals, axis=-1)
    # zero draws have probability zero but are still rejected
    while np.any(norms == 0.0):
        bad = norms == 0.0
        normals[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(normals, axis=-1)
    normals /= norms[..., None]
    noise = rng.standard_normal((units, planes_per_unit)) * bias_scale
    if centering == "cube":
        offsets = normals.sum(axis=-1) * 0.5 + noise
    elif centering == "literal":
        offsets = dim / 2 + noise
    else:
        raise GatingError(f"unknown centering {centering!r}")
    return GatingSet(normals, offsets)


def concat_gatings(gatings) -> GatingSet:
    """Join several gating sets into one with their units laid end to end."""
    gatings = list(gatings)
    return GatingSet(np.concatenate([g.normals for g in gatings]),
                     np.concatenate([g.offsets for g in gatings]))


def _check_dim(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != dim:
        raise GatingError(f"context has shape {x.shape}, expected ({dim},)")
    return x


def unit_signature(unit: GatingUnit, x) -> int:
    x = _check_dim(x, unit.normals.shape[1])
    bits = unit.normals @ x >= unit.offsets
    return int(np.dot(bits, 1 << np.arange(len(bits))))


def total_signature(gset: GatingSet, x) -> np.ndarray:
    """Signature of every unit, as an int64 vector of length ``U``."""
    x = _check_dim(x, gset.dim)
    bits = gset.normals @ x >= gset.offsets
    return bits @ gset._bit_weights
