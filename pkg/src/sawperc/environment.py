"""Seed-deterministic Bernoulli(p) bond percolation on Z^d.

Every edge owns one canonical uniform, a 53-bit integer derived from its byte
encoding and the seed:

    h = FNV-1a-64(edge_bytes(e))
    z = splitmix64_finalizer(h ^ seed)
    u = z >> 11

and the edge is open iff ``u < floor(p * 2**53)``. A single uniform per edge
gives the monotone coupling in ``p``: for a fixed seed, raising ``p`` only
opens edges.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import _kernels
from .lattice import Edge, ball_edges, edge_bytes, origin

FNV_OFFSET = 14695981039346656037
FNV_PRIME = 1099511628211
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1

MAX_FINITE_EDGES = 24


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & MASK64
    return h


def splitmix64_finalizer(x: int) -> int:
    z = x & MASK64
    z ^= z >> 30
    z = (z * MIX1) & MASK64
    z ^= z >> 27
    z = (z * MIX2) & MASK64
    z ^= z >> 31
    return z


def edge_uniform(edge: Edge, seed: int) -> int:
    """The 53-bit canonical uniform of ``edge`` (pure-Python reference)."""
    return splitmix64_finalizer(fnv1a64(edge_bytes(edge)) ^ (seed & MASK64)) >> 11


def open_threshold(p: float) -> int:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return math.floor(float(p) * 2.0**53)


@dataclass(frozen=True)
class Environment:
    """The procedural field omega: an edge state is a pure function of (p, seed, edge)."""

    p: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= float(self.p) <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def threshold(self) -> int:
        return open_threshold(self.p)

    def edge_state(self, edge: Edge) -> bool:
        thresh = self.threshold
        if thresh >= 1 << 53:
            return True
        if thresh == 0:
            return False
        return edge_uniform(edge, self.seed) < thresh

    def is_open(self, edge: Edge) -> bool:
        return self.edge_state(edge)

    def edge_states(self, edges: Sequence[Edge]) -> np.ndarray:
        """Vectorised edge_state over many edges (numba route)."""
        if not edges:
            return np.zeros(0, dtype=bool)
        bases = np.array([e.base for e in edges], dtype=np.int64)
        axes = np.array([e.axis for e in edges], dtype=np.int64)
        u = _kernels.edge_u53_many(bases, axes, np.uint64(self.seed))
        return u < np.uint64(min(self.threshold, 1 << 53))


def edge_state(env, edge: Edge) -> bool:
    return env.edge_state(edge)


@dataclass(frozen=True)
class FiniteEnvironment:
    """Explicit states on a finite edge set; edges outside the set are closed."""

    edge_set: tuple[Edge, ...]
    states: tuple[bool, ...]
    _lookup: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if len(self.edge_set) != len(self.states):
            raise ValueError("states and edge_set must have equal length")
        object.__setattr__(self, "_lookup", dict(zip(self.edge_set, self.states)))

    @classmethod
    def from_open(cls, edge_set: Iterable[Edge], open_edges: Iterable[Edge]) -> "FiniteEnvironment":
        edges = tuple(edge_set)
        opened = set(open_edges)
        return cls(edges, tuple(e in opened for e in edges))

    def edge_state(self, edge: Edge) -> bool:
        return self._lookup.get(edge, False)

    def is_open(self, edge: Edge) -> bool:
        return self.edge_state(edge)

    @property
    def n_open(self) -> int:
        return sum(self.states)


def _bernoulli_weight(p, n_open: int, n_closed: int):
    return p**n_open * (1 - p) ** n_closed


def enumerate_finite(edge_set: Sequence[Edge], p) -> Iterator[tuple[FiniteEnvironment, object]]:
    """All 2^m assignments on ``edge_set`` with their Bernoulli(p) weights.

    Pass ``p`` as a :class:`fractions.Fraction` for exact weights. Assignment
    ``i`` opens edge ``k`` iff bit ``k`` of ``i`` is set.
    """
    edges = tuple(edge_set)
    m = len(edges)
    if m > MAX_FINITE_EDGES:
        raise ValueError(f"{m} edges exceeds the exhaustive guard of {MAX_FINITE_EDGES}")
    weights = [_bernoulli_weight(p, k, m - k) for k in range(m + 1)]
    for bits in itertools.product((False, True), repeat=m):
        states = tuple(reversed(bits))
        yield FiniteEnvironment(edges, states), weights[sum(states)]


def relevant_edges(N: int, start: Sequence[int] | None = None, d: int | None = None) -> list[Edge]:
    """Edges with both endpoints within graph distance ``N`` of ``start``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if start is None:
        if d is None:
            raise ValueError("give either start or d")
        start = origin(d)
    return ball_edges(len(start), N, start)


def exact_probability(p) -> Fraction:
    return p if isinstance(p, Fraction) else Fraction(p)
