"""Geometry of the hypercubic lattice Z^d.

Sites are plain tuples of ints. A direction is encoded as a signed axis code
``±(axis + 1)``; the integer code is what paths store and serialize. Edges are
stored in canonical form ``Edge(base, axis)`` meaning the unordered pair
``{base, base + unit(axis)}``.
"""
from __future__ import annotations

from typing import Iterator, NamedTuple, Sequence

Site = tuple[int, ...]


class Direction(NamedTuple):
    axis: int
    sign: int

    @property
    def code(self) -> int:
        return self.sign * (self.axis + 1)

    @classmethod
    def from_code(cls, code: int) -> "Direction":
        if code == 0:
            raise ValueError("direction code 0 is invalid")
        return cls(abs(code) - 1, 1 if code > 0 else -1)

    def negate(self) -> "Direction":
        return Direction(self.axis, -self.sign)


class Edge(NamedTuple):
    base: Site
    axis: int

    def endpoints(self) -> tuple[Site, Site]:
        return self.base, step(self.base, Direction(self.axis, 1).code)


def origin(d: int) -> Site:
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    return (0,) * d


def direction_codes(d: int) -> list[int]:
    """All 2d direction codes in the fixed order: axis-major, + before -."""
    codes = []
    for axis in range(d):
        codes.append(axis + 1)
        codes.append(-(axis + 1))
    return codes


def directions(d: int) -> list[Direction]:
    return [Direction.from_code(c) for c in direction_codes(d)]


def step(s: Sequence[int], code: int) -> Site:
    axis = abs(code) - 1
    out = list(s)
    out[axis] += 1 if code > 0 else -1
    return tuple(out)


def neighbors(s: Sequence[int]) -> list[Site]:
    """The 2d nearest neighbours of ``s`` in axis-major, + before - order."""
    return [step(s, c) for c in direction_codes(len(s))]


def graph_distance(a: Sequence[int], b: Sequence[int]) -> int:
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    return sum(abs(x - y) for x, y in zip(a, b))


def displacement_code(a: Sequence[int], b: Sequence[int]) -> int:
    """Direction code of the unit step from ``a`` to ``b``."""
    diff = [y - x for x, y in zip(a, b)]
    if sum(abs(v) for v in diff) != 1:
        raise ValueError(f"sites {tuple(a)} and {tuple(b)} are not adjacent")
    for axis, v in enumerate(diff):
        if v:
            return v * (axis + 1)
    raise AssertionError("unreachable")


def canonical_edge(a: Sequence[int], b: Sequence[int]) -> Edge:
    if len(a) != len(b):
        raise ValueError(f"dimension mismatch: {len(a)} vs {len(b)}")
    code = displacement_code(a, b)
    axis = abs(code) - 1
    base = tuple(a) if code > 0 else tuple(b)
    return Edge(base, axis)


def box_sites(d: int, radius: int, center: Sequence[int] | None = None) -> Iterator[Site]:
    """Sites of the L1 ball of the given radius, in lexicographic order."""
    c = tuple(center) if center is not None else origin(d)

    def rec(prefix: list[int], budget: int) -> Iterator[Site]:
        k = len(prefix)
        if k == d:
            yield tuple(ci + pi for ci, pi in zip(c, prefix))
            return
        for v in range(-budget, budget + 1):
            prefix.append(v)
            yield from rec(prefix, budget - abs(v))
            prefix.pop()

    yield from rec([], radius)


def ball_edges(d: int, radius: int, center: Sequence[int] | None = None) -> list[Edge]:
    """Edges with both endpoints in the L1 ball, sorted canonically."""
    c = tuple(center) if center is not None else origin(d)
    out = []
    for s in box_sites(d, radius, c):
        for axis in range(d):
            t = step(s, axis + 1)
            if graph_distance(t, c) <= radius:
                out.append(Edge(s, axis))
    out.sort()
    return out


# -- byte encoding used by the environment hash ------------------------------

def uleb128(value: int) -> bytes:
    if value < 0:
        raise ValueError("uleb128 needs a non-negative integer")
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def zigzag(value: int) -> int:
    return 2 * value if value >= 0 else -2 * value - 1


def edge_bytes(edge: Edge) -> bytes:
    """uleb(d) || zigzag-uleb(coord) for each coord || uleb(axis)."""
    parts = [uleb128(len(edge.base))]
    parts.extend(uleb128(zigzag(x)) for x in edge.base)
    parts.append(uleb128(edge.axis))
    return b"".join(parts)
