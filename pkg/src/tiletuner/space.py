"""Ordinal tile-factor search spaces.

Every tunable parameter is a split factor of one loop axis, and its legal
values are the exact divisors of that axis' extent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .kernels import KERNELS, get_problem_size

Configuration = tuple[int, ...]


def divisor_candidates(n: int) -> list[int]:
    """All divisors of ``n`` in ascending order."""
    if n < 1:
        raise ValueError(f"divisor_candidates needs n >= 1, got {n}")
    small, large = [], []
    for d in range(1, math.isqrt(n) + 1):
        if n % d == 0:
            small.append(d)
            if d != n // d:
                large.append(n // d)
    return small + large[::-1]


@dataclass(frozen=True)
class ParamSpec:
    name: str
    axis_extent: int
    candidates: tuple[int, ...]

    @classmethod
    def for_axis(cls, name: str, extent: int) -> "ParamSpec":
        return cls(name, extent, tuple(divisor_candidates(extent)))

    def __len__(self) -> int:
        return len(self.candidates)


@dataclass(frozen=True)
class ParamSpace:
    kernel: str
    size_name: str
    params: tuple[ParamSpec, ...]

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.params]

    @property
    def ndim(self) -> int:
        return len(self.params)

    @cached_property
    def _lookup(self) -> list[dict[int, int]]:
        return [{c: i for i, c in enumerate(p.candidates)} for p in self.params]

    def validate(self, config: Sequence[int]) -> Configuration:
        config = tuple(int(v) for v in config)
        if len(config) != self.ndim:
            raise ValueError(f"expected {self.ndim} values, got {len(config)}")
        for p, lut, v in zip(self.params, self._lookup, config):
            if v not in lut:
                raise ValueError(f"{p.name}={v} does not divide extent {p.axis_extent}")
        return config

    def ordinals(self, config: Sequence[int]) -> tuple[int, ...]:
        return tuple(lut[v] for lut, v in zip(self._lookup, config))


def build_space(kernel: str, size_name: str) -> ParamSpace:
    """Search space of ``kernel`` at a registered problem size.

    LU and Cholesky get two factors over an N-extent axis each. 3mm gets six,
    one per split in schedule order: (rows, cols) of E=A*B, F=C*D, G=E*F.
    """
    size = get_problem_size(kernel, size_name)
    d = size.dims
    if size.kernel in ("lu", "cholesky"):
        extents = [d["N"], d["N"]]
    else:
        extents = [d["N"], d["M"], d["M"], d["P"], d["N"], d["P"]]
    params = tuple(ParamSpec.for_axis(f"P{i}", e) for i, e in enumerate(extents))
    return ParamSpace(size.kernel, size.name, params)


def space_size(space: ParamSpace) -> int:
    # python ints: no overflow at 1e8+ scale
    return math.prod(len(p) for p in space.params)


def config_at(space: ParamSpace, flat_index: int) -> Configuration:
    """Mixed-radix decode; the last parameter varies fastest."""
    total = space_size(space)
    if not 0 <= flat_index < total:
        raise ValueError(f"index {flat_index} outside [0, {total})")
    out = []
    for p in reversed(space.params):
        flat_index, r = divmod(flat_index, len(p))
        out.append(p.candidates[r])
    return tuple(reversed(out))


def index_of(space: ParamSpace, config: Sequence[int]) -> int:
    config = space.validate(config)
    idx = 0
    for p, o in zip(space.params, space.ordinals(config)):
        idx = idx * len(p) + o
    return idx


def encode(space: ParamSpace, config: Sequence[int]) -> np.ndarray:
    """Surrogate features: log2 of each factor."""
    return np.log2(np.asarray(space.validate(config), dtype=np.float64))


def encode_many(space: ParamSpace, configs: Sequence[Sequence[int]]) -> np.ndarray:
    if len(configs) == 0:
        return np.empty((0, space.ndim))
    return np.log2(np.asarray(configs, dtype=np.float64))


def random_config(space: ParamSpace, rng: np.random.Generator) -> Configuration:
    return tuple(p.candidates[int(rng.integers(len(p)))] for p in space.params)


def all_configs(space: ParamSpace) -> list[Configuration]:
    """Every configuration in grid order. Only sensible for small spaces."""
    return [config_at(space, k) for k in range(space_size(space))]


def format_space(space: ParamSpace) -> str:
    lines = [
        f"{p.name} {p.axis_extent} {len(p)}: " + ",".join(map(str, p.candidates))
        for p in space.params
    ]
    lines.append(f"total_size: {space_size(space)}")
    return "\n".join(lines)


__all__ = [
    "KERNELS",
    "Configuration",
    "ParamSpec",
    "ParamSpace",
    "divisor_candidates",
    "build_space",
    "space_size",
    "config_at",
    "index_of",
    "encode",
    "encode_many",
    "random_config",
    "all_configs",
    "format_space",
]
