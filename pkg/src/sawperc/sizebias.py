"""Size-biased disorder, spined environments and the exhaustive spine-lemma check.

The exhaustive laws work on the finite set of edges that a length-N path from
the origin can touch. Every SAW becomes a bitmask over that edge list, every
environment an integer, and Z_N(omega) is the number of masks contained in
omega. Spining an environment is ``omega | mask(spine)``. Probabilities are
exact rationals.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import binomtest

from .environment import MAX_FINITE_EDGES, Environment, relevant_edges
from .lattice import Edge
from .paths import Path, count_open_saw, count_saw, enumerate_paths, is_self_avoiding
from .refwalks import rng_stream, sample_uniform_saws

_CHUNK = 1 << 18


@dataclass(frozen=True)
class SpinedEnvironment:
    """omega-tilde(S, omega): spine edges forced open, other edges from ``base``."""

    base: object
    spine: Path
    _spine_edges: frozenset = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_spine_edges", frozenset(self.spine.edges()))

    def edge_state(self, edge: Edge) -> bool:
        if edge in self._spine_edges:
            return True
        return self.base.edge_state(edge)

    def is_open(self, edge: Edge) -> bool:
        return self.edge_state(edge)

    def on_spine(self, edge: Edge) -> bool:
        return edge in self._spine_edges


def make_spined(env, spine: Path) -> SpinedEnvironment:
    if not is_self_avoiding(spine):
        raise ValueError("the spine must be self-avoiding")
    return SpinedEnvironment(env, spine)


def tilde_partition(spined: SpinedEnvironment, N: int | None = None) -> int:
    """Z-tilde_N(S, omega): open SAWs of length N from the spine's start in omega-tilde."""
    if N is None:
        N = spined.spine.N
    if N != spined.spine.N:
        raise ValueError(f"spine has length {spined.spine.N}, asked for N={N}")
    return count_open_saw(spined, N, start=spined.spine.start)


# -- distributions ---------------------------------------------------------------

@dataclass(frozen=True)
class Distribution:
    """A finitely supported law with exact rational masses."""

    support: Mapping[int, Fraction]

    def __post_init__(self):
        clean = {int(k): Fraction(v) for k, v in sorted(self.support.items()) if v != 0}
        object.__setattr__(self, "support", clean)

    @property
    def total(self) -> Fraction:
        return sum(self.support.values(), Fraction(0))

    def prob(self, value: int) -> Fraction:
        return self.support.get(value, Fraction(0))

    def tv_distance(self, other: "Distribution") -> Fraction:
        keys = set(self.support) | set(other.support)
        return sum((abs(self.prob(k) - other.prob(k)) for k in keys), Fraction(0)) / 2

    def mean(self) -> Fraction:
        return sum((k * v for k, v in self.support.items()), Fraction(0))

    def to_dict(self) -> dict:
        return {"support": [[k, v.numerator, v.denominator] for k, v in self.support.items()]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, obj: dict) -> "Distribution":
        return cls({int(v): Fraction(int(n), int(d)) for v, n, d in obj["support"]})

    @classmethod
    def from_json(cls, text: str) -> "Distribution":
        return cls.from_dict(json.loads(text))


# -- exhaustive engine -------------------------------------------------------------

def _count_table(args) -> dict[tuple[int, int], int]:
    """{(Z, #open edges): number of environments} over an index range."""
    masks, m, lo, hi, force = args
    table: dict[tuple[int, int], int] = {}
    for a in range(lo, hi, _CHUNK):
        b = min(hi, a + _CHUNK)
        omega = np.arange(a, b, dtype=np.uint64)
        k = np.zeros(len(omega), dtype=np.int64)
        tmp = omega.copy()
        while tmp.any():
            k += (tmp & np.uint64(1)).astype(np.int64)
            tmp >>= np.uint64(1)
        eff = omega | np.uint64(force)
        z = np.zeros(len(omega), dtype=np.int64)
        for mask in masks:
            mk = np.uint64(mask)
            z += (eff & mk) == mk
        keys, cnt = np.unique(z * (m + 1) + k, return_counts=True)
        for key, c in zip(keys.tolist(), cnt.tolist()):
            zk = divmod(key, m + 1)
            table[zk] = table.get(zk, 0) + c
    return table


def _merge(tables: Iterable[dict]) -> dict:
    out: dict = {}
    for t in tables:
        for key, c in t.items():
            out[key] = out.get(key, 0) + c
    return out


class ExhaustiveInstance:
    """All SAWs of length N from the origin as bitmasks over the relevant edges."""

    def __init__(self, d: int, N: int, edges: Sequence[Edge] | None = None):
        self.d, self.N = d, N
        self.edges = list(edges) if edges is not None else relevant_edges(N, d=d)
        if len(self.edges) > MAX_FINITE_EDGES:
            raise ValueError(
                f"{len(self.edges)} relevant edges exceeds the exhaustive guard of {MAX_FINITE_EDGES}"
            )
        self.index = {e: i for i, e in enumerate(self.edges)}
        self.paths = list(enumerate_paths(d, N))

    @property
    def m(self) -> int:
        return len(self.edges)

    def mask(self, path: Path) -> int:
        out = 0
        for e in path.edges():
            out |= 1 << self.index[e]
        return out

    @cached_property
    def masks(self) -> list[int]:
        return [self.mask(p) for p in self.paths]

    def table(self, force: int = 0, workers: int = 1) -> dict[tuple[int, int], int]:
        total = 1 << self.m
        n_parts = max(1, workers)
        bounds = [total * i // n_parts for i in range(n_parts + 1)]
        tasks = [(self.masks, self.m, bounds[i], bounds[i + 1], force) for i in range(n_parts)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                return _merge(pool.map(_count_table, tasks))
        return _merge(map(_count_table, tasks))

    def weight(self, p: Fraction, k: int) -> Fraction:
        return p**k * (1 - p) ** (self.m - k)


def _as_fraction(p) -> Fraction:
    return p if isinstance(p, Fraction) else Fraction(p).limit_denominator(10**12)


def partition_law_exact(d: int, N: int, p, workers: int = 1) -> Distribution:
    """Law of Z_N under P, exactly."""
    p = _as_fraction(p)
    inst = ExhaustiveInstance(d, N)
    support: dict[int, Fraction] = {}
    for (z, k), c in inst.table(workers=workers).items():
        support[z] = support.get(z, Fraction(0)) + c * inst.weight(p, k)
    return Distribution(support)


def size_biased_law_exact(d: int, N: int, p, workers: int = 1) -> Distribution:
    """Law of Z_N under the size-biased measure dP~/dP = W_N."""
    p = _as_fraction(p)
    if p == 0:
        raise ValueError("the size-biased law needs p > 0")
    inst = ExhaustiveInstance(d, N)
    norm = p**N * len(inst.paths)
    support: dict[int, Fraction] = {}
    for (z, k), c in inst.table(workers=workers).items():
        support[z] = support.get(z, Fraction(0)) + c * inst.weight(p, k) * z / norm
    return Distribution(support)


def spine_law_exact(d: int, N: int, p, workers: int = 1) -> Distribution:
    """Law of Z~_N(S, omega) with S uniform on S_N and omega ~ P."""
    p = _as_fraction(p)
    inst = ExhaustiveInstance(d, N)
    n_paths = len(inst.paths)
    support: dict[int, Fraction] = {}
    for force in inst.masks:
        for (z, k), c in inst.table(force=force, workers=workers).items():
            support[z] = support.get(z, Fraction(0)) + c * inst.weight(p, k) / n_paths
    return Distribution(support)


def spine_lemma_tv(d: int, N: int, p, workers: int = 1) -> Fraction:
    return size_biased_law_exact(d, N, p, workers).tv_distance(spine_law_exact(d, N, p, workers))


def reweighting_discrepancy(d: int, N: int, p, k_range: Iterable[int] = range(-8, 9)) -> Fraction:
    """max_A |P[W in A] - E~[W^{-1} 1{W in A}]| over dyadic A = [2^k, 2^{k+1})."""
    p = _as_fraction(p)
    plain = partition_law_exact(d, N, p)
    biased = size_biased_law_exact(d, N, p)
    norm = p**N * count_saw(d, N)
    worst = Fraction(0)
    for k in k_range:
        lo, hi = Fraction(2) ** k, Fraction(2) ** (k + 1)
        lhs = sum((m for z, m in plain.support.items() if lo <= z / norm < hi), Fraction(0))
        rhs = sum(
            (m * norm / z for z, m in biased.support.items() if z > 0 and lo <= z / norm < hi),
            Fraction(0),
        )
        worst = max(worst, abs(lhs - rhs))
    return worst


# -- Monte Carlo surrogate of the strong-disorder hypothesis ----------------------

@dataclass(frozen=True)
class CertificateReport:
    n: int
    hits: int
    frequency: float
    ci_low: float
    ci_high: float
    log_threshold: float
    log_saw_count: float
    saw_count_exact: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def strong_disorder_certificate(
    samples: Sequence[int],
    c: float,
    N: int,
    p: float,
    log_saw_count: float,
    saw_count_exact: bool = True,
    confidence: float = 0.95,
) -> CertificateReport:
    """Empirical frequency of Z~_N <= e^{cN} p^N |S_N| with a Wilson interval.

    This is a report on samples, never a proof of the hypothesis.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    if not samples:
        raise ValueError("need at least one sample")
    log_thr = c * N + N * math.log(p) + log_saw_count
    # compare in log space; the 1e-12 slack absorbs rounding at exact ties
    hits = sum(1 for z in samples if z <= 0 or math.log(z) <= log_thr + 1e-12)
    ci = binomtest(hits, len(samples)).proportion_ci(confidence, method="wilson")
    return CertificateReport(
        len(samples), hits, hits / len(samples), float(ci.low), float(ci.high),
        log_thr, log_saw_count, saw_count_exact,
    )


def log_saw_count_estimate(d: int, N: int, n: int, master_seed: int, max_nodes: int = 10**8) -> tuple[float, bool]:
    """log|S_N|: exact when enumerable, else from the pi1 acceptance rate."""
    try:
        return math.log(count_saw(d, N, max_nodes=max_nodes)), True
    except ValueError:
        pass
    rng = rng_stream(master_seed, 2**32 - 1)
    _, attempts = sample_uniform_saws(d, N, n, rng)
    log_nb = math.log(2 * d) + (N - 1) * math.log(2 * d - 1)
    return log_nb + math.log(n / attempts), False


def environment_seed(master_seed: int, trial: int, attempt: int = 0) -> int:
    ss = np.random.SeedSequence([master_seed, trial, attempt])
    return int(ss.generate_state(1, np.uint64)[0])


def sample_tilde_partitions(d: int, N: int, p: float, n: int, master_seed: int) -> list[int]:
    """Z~_N(S, omega) for ``n`` draws of (S uniform on S_N, omega ~ P_p)."""
    out = []
    for t in range(n):
        rng = rng_stream(master_seed, t)
        codes, _ = sample_uniform_saws(d, N, 1, rng)
        spine = Path(d, tuple(codes[0]))
        env = Environment(p, environment_seed(master_seed, t))
        out.append(tilde_partition(make_spined(env, spine)))
    return out
