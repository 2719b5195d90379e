"""Independent reference implementations used to cross-check the fast code.

Nothing here reuses the kernels, the census or the bridge detector: the SAW
counter walks every one of the (2d)^N step sequences with no pruning, and the
bridge detector re-derives each set clause by clause from raw coordinates.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize_scalar

from .environment import enumerate_finite, relevant_edges
from .lattice import Edge


def _unit_vectors(d: int) -> np.ndarray:
    eye = np.eye(d, dtype=np.int64)
    return np.concatenate([eye, -eye])


def saw_count_bruteforce(d: int, N: int, chunk_steps: int = 2) -> int:
    """|S_N| by checking all (2d)^N sequences; fine up to ~2 * 10^7 sequences."""
    if N == 0:
        return 1
    vec = _unit_vectors(d)
    k = 2 * d
    head = min(chunk_steps, N)
    tail = N - head
    tails = np.indices((k,) * tail).reshape(tail, -1).T if tail else np.zeros((1, 0), dtype=np.int64)
    base = 2 * N + 1
    weights = base ** np.arange(d, dtype=np.int64)
    total = 0
    for prefix in np.ndindex(*(k,) * head):
        seq = np.concatenate([np.broadcast_to(np.array(prefix), (len(tails), head)), tails], axis=1)
        pos = np.cumsum(vec[seq], axis=1)  # (M, N, d)
        pos = np.concatenate([np.zeros((len(seq), 1, d), dtype=np.int64), pos], axis=1)
        keys = ((pos + N) * weights).sum(axis=2)
        keys.sort(axis=1)
        total += int((np.diff(keys, axis=1) != 0).all(axis=1).sum())
    return total


def bernoulli_rate_legendre(p: float, x: float) -> float:
    """sup_l [l x - log(1 - p + p e^l)] by numerical maximisation."""
    def neg(l):
        return -(l * x - math.log1p(p * math.expm1(l)))
    res = minimize_scalar(neg, bounds=(-60, 60), method="bounded", options={"xatol": 1e-12})
    return -res.fun


def _edge(a, b) -> Edge:
    diff = [y - x for x, y in zip(a, b)]
    axis = next(i for i, v in enumerate(diff) if v)
    lo = tuple(a) if diff[axis] > 0 else tuple(b)
    return Edge(lo, axis)


def _l1(a, b) -> int:
    return int(np.abs(np.asarray(a) - np.asarray(b)).sum())


def bridge_sets_bruteforce(env, spine) -> dict:
    """A0, A, B, C0, C by direct geometry, as plain sorted lists.

    A and C are lists of (n, direction code) pairs.
    """
    d, N = spine.d, len(spine.steps)
    S = [np.array(spine.start, dtype=np.int64)]
    for c in spine.steps:
        v = np.zeros(d, dtype=np.int64)
        v[abs(c) - 1] = 1 if c > 0 else -1
        S.append(S[-1] + v)
    X = [None] + [S[n] - S[n - 1] for n in range(1, N + 1)]

    def is_open(a, b):
        return bool(env.edge_state(_edge(a.tolist(), b.tolist())))

    def code(v):
        axis = int(np.flatnonzero(v)[0])
        return (axis + 1) * int(v[axis])

    U = {n for n in range(3, N + 1) if _l1(S[n], S[n - 3]) == 1}
    T = {n for n in range(1, N) if np.array_equal(X[n + 1], X[n])}
    V2 = {n for n in range(N + 1)
          if all(_l1(S[m], S[n]) > 2 for m in range(N + 1) if abs(m - n) > 2)}

    def chi(n):
        if n < 1 or n > N - 1 or np.array_equal(X[n + 1], X[n]):
            return False
        F = S[n - 1] + X[n + 1]
        return is_open(S[n - 1], F) and is_open(S[n + 1], F)

    units = sorted(_unit_vectors(d).tolist(), key=lambda v: code(np.array(v)))

    def xi(n):
        if n < 0 or n > N - 1:
            return None
        banned = []
        for k, sign in ((n - 1, -1), (n, -1), (n + 1, 1), (n + 1, -1), (n + 2, 1), (n + 3, 1)):
            if 1 <= k <= N:
                banned.append((sign * X[k]).tolist())
        for e in units:
            if e in banned:
                continue
            e = np.array(e)
            P, Q = S[n] + e, S[n + 1] + e
            if is_open(S[n], P) and is_open(P, Q) and is_open(Q, S[n + 1]):
                return code(e)
        return None

    A0 = [n for n in range(1, N)
          if (n - 1) in V2 and n not in T and not (set(range(n, n + 4)) & U)]
    A = [(n, code(X[n + 1])) for n in A0
         if chi(n) and not ((n - 1) in A0 and chi(n - 1))]
    B = [n for n in sorted(U)
         if is_open(S[n], S[n - 3]) and not ((n - 2) in U and is_open(S[n - 2], S[n - 5]))]
    C0 = [n for n in range(N)
          if n in V2 and n + 1 in V2 and not (set(range(n + 1, n + 4)) & U)]
    C = [(n, xi(n)) for n in C0
         if xi(n) is not None and xi(n - 1) is None and not chi(n) and not chi(n + 1)]
    return {"A0": A0, "A": A, "B": B, "C0": C0, "C": C}


def size_biased_law_bruteforce(d: int, N: int, p) -> dict[int, Fraction]:
    """Law of Z_N under the size-biased measure via enumerate_finite and a plain DFS."""
    edges = relevant_edges(N, d=d)
    origin = (0,) * d
    vec = _unit_vectors(d).tolist()
    law: dict[int, Fraction] = {}
    n_saw = None
    for env, w in enumerate_finite(edges, p):
        def count(site, seen, depth):
            if depth == N:
                return 1
            total = 0
            for v in vec:
                nxt = tuple(a + b for a, b in zip(site, v))
                if nxt not in seen and env.edge_state(_edge(site, nxt)):
                    seen.add(nxt)
                    total += count(nxt, seen, depth + 1)
                    seen.discard(nxt)
            return total

        z = count(origin, {origin}, 0)
        law[z] = law.get(z, Fraction(0)) + w * z
        if all(env.states):
            n_saw = z
    return {z: m / (Fraction(p) ** N * n_saw) for z, m in law.items() if m}
