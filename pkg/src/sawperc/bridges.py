"""Bridges over a spine, the good bridge sets and the selection-to-path injection.

Indexing: S_0..S_N are the spine sites and X_n = S_n - S_{n-1} (n in [1, N]).

* (a) over S_n: the free site F = S_{n-1} + X_{n+1}, edges (S_{n-1}, F), (F, S_{n+1}).
* (b) at n in U: the edge (S_n, S_{n-3}); using it skips S_{n-2}, S_{n-1}.
* (c) over the edge (S_n, S_{n+1}) in direction e: free sites S_n + e and
  S_{n+1} + e, edges (S_n, S_n+e), (S_n+e, S_{n+1}+e), (S_{n+1}+e, S_{n+1}).

Bridge edges are off the spine, so their state is read in the base environment.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

from .lattice import Edge, Site, canonical_edge, direction_codes, step
from .paths import Path, census, is_self_avoiding
from .sizebias import SpinedEnvironment

DEFAULT_CAP = 1 << 16
CENSUS_FIELDS = ("trial", "N", "p", "d", "sizeA", "sizeB", "sizeC", "floor_log2")


class InjectionViolation(AssertionError):
    """A built path broke length, self-avoidance or openness."""


class Witness(NamedTuple):
    n: int
    dir: int


@dataclass(frozen=True)
class BridgeSets:
    A0: tuple[int, ...]
    A: tuple[Witness, ...]
    B: tuple[int, ...]
    C0: tuple[int, ...]
    C: tuple[Witness, ...]

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.A), len(self.B), len(self.C)

    def to_dict(self) -> dict:
        return {
            "A0": list(self.A0),
            "A": [{"n": w.n, "dir": w.dir} for w in self.A],
            "B": list(self.B),
            "C0": list(self.C0),
            "C": [{"n": w.n, "dir": w.dir} for w in self.C],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, obj: dict) -> "BridgeSets":
        return cls(
            tuple(obj["A0"]),
            tuple(Witness(w["n"], w["dir"]) for w in obj["A"]),
            tuple(obj["B"]),
            tuple(obj["C0"]),
            tuple(Witness(w["n"], w["dir"]) for w in obj["C"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "BridgeSets":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Selection:
    alpha: frozenset = frozenset()
    beta: frozenset = frozenset()
    gamma: frozenset = frozenset()

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        if len(self.beta) != len(self.gamma):
            raise ValueError("a selection needs |beta| = |gamma|")


@dataclass(frozen=True)
class BridgeSquare:
    kind: str
    indices: tuple[int, ...]
    bridge_edges: tuple[Edge, ...]
    free_sites: tuple[Site, ...]
    spine_edges: tuple[Edge, ...]

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self.bridge_edges + self.spine_edges

    @property
    def sites(self) -> frozenset:
        return frozenset(s for e in self.edges for s in e.endpoints())


class _EdgeCache:
    """Memoised base-environment edge states keyed by site pairs."""

    def __init__(self, env):
        self.env = env
        self._memo: dict[Edge, bool] = {}

    def __call__(self, a: Site, b: Site) -> bool:
        e = canonical_edge(a, b)
        s = self._memo.get(e)
        if s is None:
            s = bool(self.env.edge_state(e))
            self._memo[e] = s
        return s


class _Detector:
    def __init__(self, env, spine: Path, t_convention: str):
        self.spine = spine
        self.S = spine.sites
        self.N = spine.N
        self.X = (0,) + spine.steps  # X[n] for n in [1, N]
        c = census(spine, t_convention)
        self.U, self.T, self.V2 = set(c.U), set(c.T), set(c.V2)
        self.is_open = _EdgeCache(env)
        self.codes = sorted(direction_codes(spine.d))
        self._chi: dict[int, bool] = {}
        self._xi: dict[int, int | None] = {}

    def chi(self, n: int) -> bool:
        """Open length-two bridge over S_n; 0 when it is undefined or degenerate."""
        if n in self._chi:
            return self._chi[n]
        S, X = self.S, self.X
        out = False
        if 1 <= n <= self.N - 1 and X[n + 1] != X[n]:
            F = step(S[n - 1], X[n + 1])
            out = self.is_open(S[n - 1], F) and self.is_open(S[n + 1], F)
        self._chi[n] = out
        return out

    def xi(self, n: int) -> int | None:
        """Lowest direction code carrying an open (c)-bridge over (S_n, S_{n+1})."""
        if n in self._xi:
            return self._xi[n]
        out = None
        if 0 <= n <= self.N - 1:
            S, X, N = self.S, self.X, self.N
            banned = {X[n + 1], -X[n + 1]}
            for k, sign in ((n - 1, -1), (n, -1), (n + 2, 1), (n + 3, 1)):
                if 1 <= k <= N:
                    banned.add(sign * X[k])
            for e in self.codes:
                if e in banned:
                    continue
                P, Q = step(S[n], e), step(S[n + 1], e)
                if self.is_open(S[n], P) and self.is_open(P, Q) and self.is_open(Q, S[n + 1]):
                    out = e
                    break
        self._xi[n] = out
        return out

    def run(self) -> BridgeSets:
        S, X, N, U, T, V2 = self.S, self.X, self.N, self.U, self.T, self.V2
        A0 = tuple(
            n for n in range(1, N)
            if (n - 1) in V2 and n not in T and not any(k in U for k in range(n, n + 4))
        )
        a0 = set(A0)
        A = tuple(
            Witness(n, X[n + 1]) for n in A0
            if self.chi(n) and not ((n - 1) in a0 and self.chi(n - 1))
        )
        B = tuple(
            n for n in sorted(U)
            if self.is_open(S[n], S[n - 3])
            and not ((n - 2) in U and self.is_open(S[n - 2], S[n - 5]))
        )
        C0 = tuple(
            n for n in range(0, N)
            if n in V2 and (n + 1) in V2 and not any(k in U for k in range(n + 1, n + 4))
        )
        C = tuple(
            Witness(n, self.xi(n)) for n in C0
            if self.xi(n) is not None
            and (n == 0 or self.xi(n - 1) is None)
            and not self.chi(n) and not self.chi(n + 1)
        )
        return BridgeSets(A0, A, B, C0, C)


def detect_bridges(env, spine: Path, t_convention: str = "next") -> BridgeSets:
    """The sets A0, A, B, C0, C of ``spine`` in the base environment ``env``."""
    return _Detector(env, spine, t_convention).run()


# -- the injection -----------------------------------------------------------------

def _check_selection(sel: Selection, sets: BridgeSets) -> tuple[dict, dict]:
    a_dir = dict(sets.A)
    c_dir = dict(sets.C)
    if not sel.alpha <= a_dir.keys():
        raise ValueError(f"alpha {sorted(sel.alpha - a_dir.keys())} not in A")
    if not sel.beta <= set(sets.B):
        raise ValueError(f"beta {sorted(sel.beta - set(sets.B))} not in B")
    if not sel.gamma <= c_dir.keys():
        raise ValueError(f"gamma {sorted(sel.gamma - c_dir.keys())} not in C")
    return a_dir, c_dir


def build_path(spine: Path, sel: Selection, sets: BridgeSets, env=None) -> Path:
    """Reroute ``spine`` through the selected bridges.

    Always checks the length and self-avoidance of the result; with ``env``
    also checks that every edge is open in the spined environment.
    """
    a_dir, c_dir = _check_selection(sel, sets)
    S = spine.sites
    skipped = {k for m in sel.beta for k in (m - 2, m - 1)}
    sites: list[Site] = []
    for k, s in enumerate(S):
        if k in skipped:
            continue
        sites.append(step(S[k - 1], a_dir[k]) if k in sel.alpha else s)
        if k in sel.gamma:
            e = c_dir[k]
            sites.append(step(S[k], e))
            sites.append(step(S[k + 1], e))
    try:
        path = Path.from_sites(sites)
    except ValueError as exc:
        raise InjectionViolation(f"selection {sel} gives a broken chain: {exc}") from exc
    validate_built_path(path, spine, env)
    return path


def validate_built_path(path: Path, spine: Path, env=None) -> None:
    if path.N != spine.N:
        raise InjectionViolation(f"built path has length {path.N}, spine has {spine.N}")
    if path.start != spine.start:
        raise InjectionViolation("built path does not start at the spine's start")
    if not is_self_avoiding(path):
        raise InjectionViolation("built path is not self-avoiding")
    if env is not None:
        spined = env if isinstance(env, SpinedEnvironment) else SpinedEnvironment(env, spine)
        for e in path.edges():
            if not spined.edge_state(e):
                raise InjectionViolation(f"built path uses the closed edge {e}")


def count_lower_bound(n_a: int, n_b: int, n_c: int) -> int:
    if min(n_a, n_b, n_c) < 0:
        raise ValueError("set sizes must be non-negative")
    return 2**n_a * sum(math.comb(n_b, k) * math.comb(n_c, k) for k in range(min(n_b, n_c) + 1))


def iter_selections(sets: BridgeSets) -> Iterator[Selection]:
    A = [w.n for w in sets.A]
    C = [w.n for w in sets.C]
    for r in range(len(A) + 1):
        for alpha in itertools.combinations(A, r):
            for k in range(min(len(sets.B), len(C)) + 1):
                for beta in itertools.combinations(sets.B, k):
                    for gamma in itertools.combinations(C, k):
                        yield Selection(alpha, beta, gamma)


@dataclass
class Enumeration:
    paths: set = field(default_factory=set)
    count: int = 0
    expected: int = 0
    truncated: bool = False


def enumerate_selected_paths(
    spine: Path, sets: BridgeSets, cap: int = DEFAULT_CAP, env=None, truncate: bool = False
) -> Enumeration:
    """Build every consistent selection and check the map is injective.

    With ``truncate`` the first ``cap`` selections are built instead of raising.
    """
    expected = count_lower_bound(*sets.sizes)
    if expected > cap and not truncate:
        raise ValueError(f"{expected} selections exceed the cap of {cap}")
    spined = SpinedEnvironment(env, spine) if env is not None else None
    out = Enumeration(expected=expected, truncated=expected > cap)
    for sel in itertools.islice(iter_selections(sets), cap):
        path = build_path(spine, sel, sets, spined)
        out.paths.add(path.steps)
        out.count += 1
    if len(out.paths) != out.count:
        raise InjectionViolation(f"{out.count} selections gave only {len(out.paths)} distinct paths")
    if not out.truncated and out.count != expected:
        raise InjectionViolation(f"enumerated {out.count} selections, formula gives {expected}")
    return out


def tilde_partition_floor(spine: Path, env, t_convention: str = "next") -> tuple[int, tuple[int, int, int]]:
    sizes = detect_bridges(env, spine, t_convention).sizes
    return count_lower_bound(*sizes), sizes


def log2_lower_bound(n_a: int, n_b: int, n_c: int) -> float:
    return math.log2(count_lower_bound(n_a, n_b, n_c))


# -- squares and the overlap audit --------------------------------------------------

def bridge_squares(spine: Path, sets: BridgeSets) -> list[BridgeSquare]:
    S = spine.sites
    E = canonical_edge
    out = []
    for n, x in sets.A:
        F = step(S[n - 1], x)
        out.append(BridgeSquare(
            "a", (n,), (E(S[n - 1], F), E(F, S[n + 1])), (F,),
            (E(S[n - 1], S[n]), E(S[n], S[n + 1])),
        ))
    for n in sets.B:
        out.append(BridgeSquare(
            "b", (n,), (E(S[n], S[n - 3]),), (),
            tuple(E(S[k - 1], S[k]) for k in (n - 2, n - 1, n)),
        ))
    for n, e in sets.C:
        P, Q = step(S[n], e), step(S[n + 1], e)
        out.append(BridgeSquare(
            "c", (n,), (E(S[n], P), E(P, Q), E(Q, S[n + 1])), (P, Q),
            (E(S[n], S[n + 1]),),
        ))
    return out


def overlap_audit(spine: Path, squares: Sequence[BridgeSquare]) -> list[str]:
    """Pairwise edge sharing, free sites on the spine or inside another square."""
    problems = []
    on_spine = set(spine.sites)
    for sq in squares:
        for f in sq.free_sites:
            if f in on_spine:
                problems.append(f"{sq.kind}{sq.indices}: free site {f} lies on the spine")
    for s, t in itertools.combinations(squares, 2):
        shared = set(s.edges) & set(t.edges)
        if shared:
            problems.append(f"{s.kind}{s.indices} and {t.kind}{t.indices} share edges {sorted(shared)}")
        for f in s.free_sites:
            if f in t.sites:
                problems.append(f"free site {f} of {s.kind}{s.indices} lies in {t.kind}{t.indices}")
        for f in t.free_sites:
            if f in s.sites:
                problems.append(f"free site {f} of {t.kind}{t.indices} lies in {s.kind}{s.indices}")
    return problems


def a0_lower_bound(spine: Path, t_convention: str = "next") -> int:
    """N - 1 - |[0, N-2] minus V2| - |T| - 3|U|, the counting bound on |A0|.

    The V2 term only counts indices that can be n - 1 for n in [1, N-1];
    writing it as N - |V2| overshoots by one on a fully spread path.
    """
    c = census(spine, t_convention)
    N = spine.N
    v2 = set(c.V2)
    missing = sum(1 for k in range(N - 1) if k not in v2)
    return N - 1 - missing - len(c.T) - 3 * len(c.U)


def census_row(trial: int, spine: Path, p: float, sets: BridgeSets) -> dict:
    a, b, c = sets.sizes
    return {
        "trial": trial, "N": spine.N, "p": p, "d": spine.d,
        "sizeA": a, "sizeB": b, "sizeC": c,
        "floor_log2": f"{log2_lower_bound(a, b, c):.12g}",
    }
