"""Self-avoiding paths, exact path counting and open-path partition functions."""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterator, Sequence

import numpy as np

from . import _kernels
from .lattice import Edge, Site, canonical_edge, direction_codes, origin, step

T_CONVENTIONS = ("prev", "next")
DEFAULT_MAX_NODES = 10**10


@dataclass(frozen=True)
class Path:
    """An N-step nearest-neighbour path; steps are signed axis codes ±(axis+1)."""

    d: int
    steps: tuple[int, ...]
    start: Site | None = None

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"dimension must be >= 2, got {self.d}")
        object.__setattr__(self, "steps", tuple(int(c) for c in self.steps))
        for c in self.steps:
            if c == 0 or abs(c) > self.d:
                raise ValueError(f"invalid step code {c} for d={self.d}")
        start = origin(self.d) if self.start is None else tuple(int(x) for x in self.start)
        if len(start) != self.d:
            raise ValueError("start has the wrong dimension")
        object.__setattr__(self, "start", start)

    @classmethod
    def from_sites(cls, sites: Sequence[Sequence[int]]) -> "Path":
        from .lattice import displacement_code

        sites = [tuple(s) for s in sites]
        steps = tuple(displacement_code(a, b) for a, b in zip(sites, sites[1:]))
        return cls(len(sites[0]), steps, sites[0])

    @classmethod
    def straight(cls, d: int, N: int, code: int = 1) -> "Path":
        return cls(d, (code,) * N)

    @property
    def N(self) -> int:
        return len(self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    @cached_property
    def sites(self) -> tuple[Site, ...]:
        out = [self.start]
        for c in self.steps:
            out.append(step(out[-1], c))
        return tuple(out)

    @cached_property
    def site_array(self) -> np.ndarray:
        return np.array(self.sites, dtype=np.int64).reshape(self.N + 1, self.d)

    def increment(self, n: int) -> int:
        """Direction code of X_n = S_n - S_{n-1}, for n in [1, N]."""
        if not 1 <= n <= self.N:
            raise IndexError(f"increment index {n} outside [1, {self.N}]")
        return self.steps[n - 1]

    def edges(self) -> list[Edge]:
        s = self.sites
        return [canonical_edge(a, b) for a, b in zip(s, s[1:])]

    def to_dict(self) -> dict:
        return {"d": self.d, "start": list(self.start), "steps": list(self.steps)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, obj: dict) -> "Path":
        return cls(int(obj["d"]), tuple(obj["steps"]), tuple(obj["start"]))

    @classmethod
    def from_json(cls, text: str) -> "Path":
        return cls.from_dict(json.loads(text))


def is_self_avoiding(path: Path) -> bool:
    return len(set(path.sites)) == path.N + 1


# -- exhaustive counting -------------------------------------------------------

def _code_to_index(code: int) -> int:
    return 2 * (abs(code) - 1) + (0 if code > 0 else 1)


def _index_to_code(j: int) -> int:
    return (j // 2 + 1) * (1 if j % 2 == 0 else -1)


def _check_budget(d: int, N: int, max_nodes: int) -> None:
    if N >= 2 and (2 * d - 1) ** (N - 1) > max_nodes:
        raise ValueError(
            f"exhaustive enumeration at d={d}, N={N} exceeds the budget of {max_nodes} nodes"
        )


_EMPTY_AXIS = np.zeros(0, dtype=np.int64)


def _prefix_array(d: int, codes: Sequence[int], start: Sequence[int] | None = None) -> np.ndarray:
    s = origin(d) if start is None else tuple(start)
    sites = [s]
    for c in codes:
        sites.append(step(sites[-1], c))
    return np.array(sites, dtype=np.int64).reshape(len(sites), d)


def _count_prefix(args) -> int:
    d, N, codes, mode = args
    if len(codes) == N:
        return 1
    counts = np.zeros(N + 1, dtype=np.int64)
    _kernels.dfs_counts(
        _prefix_array(d, codes), N, mode, np.uint64(1 << 53), np.uint64(0),
        np.zeros((0, d), np.int64), _EMPTY_AXIS, counts,
    )
    return int(counts[N])


def _prefix_ok(codes: Sequence[int], mode: int, d: int) -> bool:
    sites = [origin(d)]
    for c in codes:
        sites.append(step(sites[-1], c))
    k = len(sites) - 1
    if mode == 0:
        return len(set(sites)) == k + 1
    return all(
        sites[n] != sites[n - 2] and (n < 4 or sites[n] != sites[n - 4]) for n in range(2, k + 1)
    )


def _count_constrained(d: int, N: int, mode: int, max_nodes: int, workers: int) -> int:
    if N < 0:
        raise ValueError("N must be >= 0")
    if N == 0:
        return 1
    _check_budget(d, N, max_nodes)
    if N == 1:
        return 2 * d
    # All 2d first steps are equivalent under lattice symmetry; split on the
    # second step for parallel work.
    tasks = [
        (d, N, (1, c), mode) for c in direction_codes(d) if _prefix_ok((1, c), mode, d)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_count_prefix, tasks))
    else:
        parts = [_count_prefix(t) for t in tasks]
    # per-branch counts fit in int64; the total is a Python int
    return 2 * d * sum(parts)


@lru_cache(maxsize=None)
def _count_saw_cached(d: int, N: int, max_nodes: int) -> int:
    return _count_constrained(d, N, 0, max_nodes, 1)


def count_saw(d: int, N: int, *, max_nodes: int = DEFAULT_MAX_NODES, workers: int = 1) -> int:
    """Exact |S_N|: self-avoiding N-step paths from the origin of Z^d."""
    if workers > 1:
        return _count_constrained(d, N, 0, max_nodes, workers)
    return _count_saw_cached(d, N, max_nodes)


@lru_cache(maxsize=None)
def count_saw_no4(d: int, N: int, *, max_nodes: int = DEFAULT_MAX_NODES) -> int:
    """Exact |S^4_N|: paths with S_n not in {S_{n-2}, S_{n-4}} for every n."""
    return _count_constrained(d, N, 1, max_nodes, 1)


def enumerate_paths(d: int, N: int, mode: str = "saw", start: Sequence[int] | None = None) -> Iterator[Path]:
    """Yield every path of the given class in DFS order (small N only).

    ``mode`` is ``"saw"`` for S_N or ``"no4"`` for S^4_N.
    """
    if mode not in ("saw", "no4"):
        raise ValueError(f"unknown mode {mode!r}")
    s0 = origin(d) if start is None else tuple(start)
    codes = direction_codes(d)
    sites = [s0]
    steps: list[int] = []

    def no4_ok(s: Site) -> bool:
        k = len(sites)
        if k >= 2 and s == sites[k - 2]:
            return False
        if k >= 4 and s == sites[k - 4]:
            return False
        return True

    def rec():
        if len(steps) == N:
            yield Path(d, tuple(steps), s0)
            return
        for c in codes:
            s = step(sites[-1], c)
            ok = (s not in sites) if mode == "saw" else no4_ok(s)
            if not ok:
                continue
            sites.append(s)
            steps.append(c)
            yield from rec()
            sites.pop()
            steps.pop()

    yield from rec()


# -- open paths ---------------------------------------------------------------

def _procedural_parts(env):
    """(Environment, spine edges) when the kernel route applies, else None."""
    from .environment import Environment

    if isinstance(env, Environment):
        return env, []
    base = getattr(env, "base", None)
    spine = getattr(env, "spine", None)
    if isinstance(base, Environment) and spine is not None:
        return base, spine.edges()
    return None


def _open_counts_kernel(env, spine_edges, d, N, start) -> np.ndarray:
    counts = np.zeros(N + 1, dtype=np.int64)
    if spine_edges:
        sb = np.array([e.base for e in spine_edges], dtype=np.int64).reshape(-1, d)
        sa = np.array([e.axis for e in spine_edges], dtype=np.int64)
    else:
        sb, sa = np.zeros((0, d), np.int64), _EMPTY_AXIS
    _kernels.dfs_counts(
        _prefix_array(d, (), start), N, 0, np.uint64(min(env.threshold, 1 << 53)),
        np.uint64(env.seed), sb, sa, counts,
    )
    counts[0] = 1
    return counts


def _open_counts_generic(env, d, N, start) -> list[int]:
    counts = [0] * (N + 1)
    counts[0] = 1
    codes = direction_codes(d)
    sites = [tuple(start)]
    on_path = {sites[0]}

    def rec(depth: int) -> None:
        here = sites[-1]
        for c in codes:
            nxt = step(here, c)
            if nxt in on_path:
                continue
            if not env.edge_state(canonical_edge(here, nxt)):
                continue
            counts[depth + 1] += 1
            if depth + 1 < N:
                sites.append(nxt)
                on_path.add(nxt)
                rec(depth + 1)
                on_path.discard(nxt)
                sites.pop()

    if N > 0:
        rec(0)
    return counts


def open_path_counts(env, N: int, start: Sequence[int] | None = None, d: int | None = None) -> list[int]:
    """[Z_0, Z_1, ..., Z_N] for open self-avoiding paths from ``start``."""
    if start is None:
        if d is None:
            d = _infer_dimension(env)
        start = origin(d)
    start = tuple(start)
    d = len(start)
    parts = _procedural_parts(env)
    if parts is not None:
        base, spine_edges = parts
        return [int(c) for c in _open_counts_kernel(base, spine_edges, d, N, start)]
    return _open_counts_generic(env, d, N, start)


def _infer_dimension(env) -> int:
    spine = getattr(env, "spine", None)
    if spine is not None:
        return spine.d
    edges = getattr(env, "edge_set", None)
    if edges is None and getattr(env, "base", None) is not None:
        edges = getattr(env.base, "edge_set", None)
    if edges:
        return len(edges[0].base)
    raise ValueError("cannot infer the dimension; pass start or d")


def count_open_saw(env, N: int, start: Sequence[int] | None = None, d: int | None = None) -> int:
    """Exact Z_{N,start}(omega), or Z-tilde when ``env`` is a spined environment."""
    return open_path_counts(env, N, start, d)[N]


def normalized_partition(env, N: int, p=None, start: Sequence[int] | None = None, d: int | None = None) -> float:
    """W_N = Z_N / (p^N |S_N|), evaluated as a log-domain ratio."""
    if p is None:
        p = env.p
    if p <= 0:
        raise ValueError("W_N is undefined at p = 0")
    z = count_open_saw(env, N, start, d)
    if z == 0:
        return 0.0
    dim = len(start) if start is not None else (d or _infer_dimension(env))
    log_w = math.log(z) - N * math.log(p) - math.log(count_saw(dim, N))
    return math.exp(log_w)


def growth_sequence(env, N_max: int, start: Sequence[int] | None = None, d: int | None = None) -> list[tuple[int, int, float]]:
    """(N, Z_N, Z_N^{1/N}) for N = 1..N_max from a single pruned DFS."""
    counts = open_path_counts(env, N_max, start, d)
    return [(n, counts[n], counts[n] ** (1.0 / n) if counts[n] else 0.0) for n in range(1, N_max + 1)]


# -- censuses ----------------------------------------------------------------

@dataclass(frozen=True)
class PathCensus:
    """Index sets of a path. W1/W2 are the one-sided returns used by the walk statistics."""

    N: int
    U: tuple[int, ...]
    T: tuple[int, ...]
    V1: tuple[int, ...]
    V2: tuple[int, ...]
    W1: tuple[int, ...] = ()
    W2: tuple[int, ...] = ()
    t_convention: str = "prev"

    def sizes(self) -> dict[str, int]:
        return {k: len(getattr(self, k)) for k in ("U", "T", "V1", "V2", "W1", "W2")}


def distance_matrix(sites: np.ndarray) -> np.ndarray:
    return np.abs(sites[:, None, :] - sites[None, :, :]).sum(axis=-1)


def turn_set(steps: Sequence[int], convention: str = "prev") -> tuple[int, ...]:
    """Straight-step indices.

    ``"prev"``: n in [2, N-1] with X_n = X_{n-1}.
    ``"next"``: n in [1, N-1] with X_{n+1} = X_n (the bend-free indices that
    make the length-two bridge over S_n degenerate).
    """
    N = len(steps)
    if convention == "prev":
        return tuple(n for n in range(2, N) if steps[n - 1] == steps[n - 2])
    if convention == "next":
        return tuple(n for n in range(1, N) if steps[n] == steps[n - 1])
    raise ValueError(f"unknown T convention {convention!r}")


def raw_census(path: Path, t_convention: str = "prev", D: np.ndarray | None = None) -> PathCensus:
    """Census without the self-avoidance precondition (for Markov walk samples)."""
    N = path.N
    if D is None:
        D = distance_matrix(path.site_array)
    idx = np.arange(N + 1)
    gap = np.abs(idx[:, None] - idx[None, :])
    U = tuple(n for n in range(3, N + 1) if D[n, n - 3] == 1)
    V1 = tuple(int(n) for n in np.flatnonzero(~((gap > 1) & (D <= 1)).any(axis=1)))
    V2 = tuple(int(n) for n in np.flatnonzero(~((gap > 2) & (D <= 2)).any(axis=1)))
    earlier = idx[None, :] < idx[:, None]
    W1 = tuple(int(n) for n in np.flatnonzero((earlier & (gap > 1) & (D == 1)).any(axis=1)))
    W2 = tuple(int(n) for n in np.flatnonzero((earlier & (gap > 2) & (D <= 2)).any(axis=1)))
    return PathCensus(N, U, turn_set(path.steps, t_convention), V1, V2, W1, W2, t_convention)


def census(path: Path, t_convention: str = "prev") -> PathCensus:
    if not is_self_avoiding(path):
        raise ValueError("census requires a self-avoiding path")
    return raw_census(path, t_convention)


def is_good_spine(path: Path, eps: float, c: PathCensus | None = None) -> bool:
    """Membership in the good-spine set at tolerance ``eps``.

    ``eps = 1`` is accepted as the degenerate band used by sanity runs.
    """
    if not 0 < eps <= 1:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    if c is None:
        c = census(path)
    N, d = path.N, path.d
    u = len(c.U)
    return (
        len(c.V2) >= (1 - eps) * N
        and len(c.T) <= eps * N
        and (1 - eps) * N / (2 * d) <= u <= (1 + eps) * N / (2 * d)
    )
