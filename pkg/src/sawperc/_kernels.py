"""numba kernels for the hot loops: edge hashing, pruned DFS, walk builders.

Direction indices inside kernels run over ``0 .. 2d-1`` with index ``j``
meaning axis ``j // 2`` and sign ``+`` for even ``j``. The reverse of ``j``
is ``j ^ 1``.
"""
from __future__ import annotations

import numpy as np
from numba import njit

FNV_OFFSET = np.uint64(14695981039346656037)
FNV_PRIME = np.uint64(1099511628211)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
TWO53 = np.uint64(1 << 53)

_U7 = np.uint64(7)
_U0x7F = np.uint64(0x7F)
_U0x80 = np.uint64(0x80)
_U11 = np.uint64(11)
_U27 = np.uint64(27)
_U30 = np.uint64(30)
_U31 = np.uint64(31)


@njit(cache=True)
def _fnv_uleb(h, v):
    while v >= _U0x80:
        h ^= (v & _U0x7F) | _U0x80
        h *= FNV_PRIME
        v >>= _U7
    h ^= v
    h *= FNV_PRIME
    return h


@njit(cache=True)
def _zigzag(x):
    if x >= 0:
        return np.uint64(2 * x)
    return np.uint64(-2 * x - 1)


@njit(cache=True)
def edge_u53(base, axis, seed):
    """Canonical 53-bit uniform integer of the edge ``(base, axis)``."""
    d = base.shape[0]
    h = FNV_OFFSET
    h = _fnv_uleb(h, np.uint64(d))
    for i in range(d):
        h = _fnv_uleb(h, _zigzag(base[i]))
    h = _fnv_uleb(h, np.uint64(axis))
    z = h ^ seed
    z ^= z >> _U30
    z *= MIX1
    z ^= z >> _U27
    z *= MIX2
    z ^= z >> _U31
    return z >> _U11


@njit(cache=True)
def edge_u53_many(bases, axes, seed):
    out = np.empty(bases.shape[0], np.uint64)
    for i in range(bases.shape[0]):
        out[i] = edge_u53(bases[i], axes[i], seed)
    return out


@njit(cache=True)
def _forced_open(base, axis, spine_base, spine_axis):
    d = base.shape[0]
    for m in range(spine_axis.shape[0]):
        if spine_axis[m] != axis:
            continue
        same = True
        for i in range(d):
            if spine_base[m, i] != base[i]:
                same = False
                break
        if same:
            return True
    return False


@njit(cache=True)
def _same(pos, a, b, d):
    for i in range(d):
        if pos[a, i] != pos[b, i]:
            return False
    return True


@njit(cache=True)
def dfs_counts(prefix, n_max, mode, thresh, seed, spine_base, spine_axis, counts):
    """Count constrained open paths extending ``prefix`` up to length ``n_max``.

    ``counts[k]`` is incremented once per admissible path of length ``k``
    (``k > len(prefix) - 1``). ``mode`` 0 requires self-avoidance, mode 1
    only forbids ``S_k`` in ``{S_{k-2}, S_{k-4}}``. An edge is usable iff it
    is a spine edge or its uniform is below ``thresh``.
    """
    d = prefix.shape[1]
    k0 = prefix.shape[0] - 1
    ndir = 2 * d
    all_open = thresh >= TWO53
    pos = np.zeros((n_max + 1, d), np.int64)
    for k in range(k0 + 1):
        for i in range(d):
            pos[k, i] = prefix[k, i]
    nxt = np.zeros(n_max + 1, np.int64)
    base = np.empty(d, np.int64)
    depth = k0
    while depth >= k0:
        if depth == n_max or nxt[depth] >= ndir:
            depth -= 1
            continue
        j = nxt[depth]
        nxt[depth] += 1
        axis = j // 2
        sgn = 1 if j % 2 == 0 else -1
        k = depth + 1
        for i in range(d):
            pos[k, i] = pos[depth, i]
        pos[k, axis] += sgn
        ok = True
        if mode == 0:
            m = k - 2
            while m >= 0:
                if _same(pos, k, m, d):
                    ok = False
                    break
                m -= 2
        else:
            if k >= 2 and _same(pos, k, k - 2, d):
                ok = False
            elif k >= 4 and _same(pos, k, k - 4, d):
                ok = False
        if not ok:
            continue
        if not all_open:
            src = depth if sgn > 0 else k
            for i in range(d):
                base[i] = pos[src, i]
            if not _forced_open(base, axis, spine_base, spine_axis):
                if edge_u53(base, axis, seed) >= thresh:
                    continue
        counts[k] += 1
        depth = k
        nxt[depth] = 0
    return counts


@njit(cache=True)
def build_pi1(d, u):
    """Non-backtracking walks from uniforms ``u`` of shape (B, N)."""
    nb, n = u.shape
    out = np.empty((nb, n), np.int64)
    for b in range(nb):
        j = int(u[b, 0] * 2 * d)
        out[b, 0] = j
        for k in range(1, n):
            rev = out[b, k - 1] ^ 1
            c = int(u[b, k] * (2 * d - 1))
            out[b, k] = c if c < rev else c + 1
    return out


@njit(cache=True)
def build_pi2(d, u):
    """No-backtrack, no-4-loop kinetic walks from uniforms of shape (B, N).

    At each step the walk avoids ``S_{k-1}`` and, when it is a neighbour,
    ``S_{k-3}``.
    """
    nb, n = u.shape
    out = np.empty((nb, n), np.int64)
    pos = np.zeros((n + 1, d), np.int64)
    allowed = np.empty(2 * d, np.int64)
    for b in range(nb):
        for i in range(d):
            pos[0, i] = 0
        for k in range(n):
            cnt = 0
            rev = out[b, k - 1] ^ 1 if k >= 1 else -1
            bad = -1
            if k >= 3:
                dist = 0
                ax = -1
                sg = 0
                for i in range(d):
                    delta = pos[k - 3, i] - pos[k, i]
                    if delta != 0:
                        dist += abs(delta)
                        ax = i
                        sg = delta
                if dist == 1:
                    bad = 2 * ax + (0 if sg > 0 else 1)
            for j in range(2 * d):
                if j != rev and j != bad:
                    allowed[cnt] = j
                    cnt += 1
            j = allowed[int(u[b, k] * cnt)]
            out[b, k] = j
            for i in range(d):
                pos[k + 1, i] = pos[k, i]
            pos[k + 1, j // 2] += 1 if j % 2 == 0 else -1
    return out


@njit(cache=True)
def saw_rows(d, idx):
    """Self-avoidance flag per row of direction indices (sort-based)."""
    nb, n = idx.shape
    radix = 2 * n + 1
    flags = np.empty(nb, np.bool_)
    keys = np.empty(n + 1, np.int64)
    pos = np.zeros(d, np.int64)
    for b in range(nb):
        for i in range(d):
            pos[i] = 0
        for k in range(n + 1):
            if k > 0:
                j = idx[b, k - 1]
                pos[j // 2] += 1 if j % 2 == 0 else -1
            key = 0
            for i in range(d):
                key = key * radix + pos[i] + n
            keys[k] = key
        s = np.sort(keys)
        ok = True
        for k in range(n):
            if s[k] == s[k + 1]:
                ok = False
                break
        flags[b] = ok
    return flags
