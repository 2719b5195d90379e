"""Markov reference walks and the bounds used to compare them with the SAW.

pi1 is the non-backtracking walk (uniform on non-backtracking paths); pi2 is
the kinetic walk that also refuses to close a 4-cycle. pi2 is *not* uniform
on S^4_N: a pi2 path has probability

    (1/2d) (2d-1)^{-(N-1)} ((2d-1)/(2d-2))^{|U_{N-1}|}

because the step after every U-turn index has one fewer choice. The density
of the uniform law pi2_N with respect to pi2 is therefore proportional to
((2d-2)/(2d-1))^{|U_{N-1}|}; :func:`resolve_pi2_direction` re-derives this
from the exact decision tree.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from . import _kernels
from .lattice import direction_codes, origin, step
from .paths import Path, count_saw, is_self_avoiding, raw_census

# +1: weight = ((2d-2)/(2d-1))^{+|U_{N-1}|}. Verified by resolve_pi2_direction.
RN_EXPONENT_SIGN = 1


class RejectionBudgetExceeded(RuntimeError):
    def __init__(self, attempts: int):
        super().__init__(f"no self-avoiding sample after {attempts} attempts")
        self.attempts = attempts


def rng_stream(master_seed: int, trial: int = 0) -> np.random.Generator:
    """Counter-based stream keyed by (master seed, trial index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([master_seed, trial])))


@dataclass(frozen=True)
class WalkLaw:
    kind: str
    d: int
    N: int

    def __post_init__(self):
        if self.kind not in ("simple", "pi1", "pi2"):
            raise ValueError(f"unknown walk law {self.kind!r}")
        if self.N < 1:
            raise ValueError("N must be >= 1")


# -- samplers -----------------------------------------------------------------

def _indices_to_codes(idx: np.ndarray) -> np.ndarray:
    return np.where(idx % 2 == 0, 1, -1) * (idx // 2 + 1)


def sample_pi1_batch(d: int, N: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` independent pi1 walks as an (n, N) array of step codes."""
    return _indices_to_codes(_kernels.build_pi1(d, rng.random((n, N))))


def sample_pi1(d: int, N: int, rng: np.random.Generator) -> Path:
    return Path(d, tuple(sample_pi1_batch(d, N, 1, rng)[0]))


def sample_pi2_batch(d: int, N: int, n: int, rng: np.random.Generator) -> np.ndarray:
    if d < 2:
        raise ValueError("pi2 needs d >= 2")
    return _indices_to_codes(_kernels.build_pi2(d, rng.random((n, N))))


def sample_pi2(d: int, N: int, rng: np.random.Generator) -> Path:
    return Path(d, tuple(sample_pi2_batch(d, N, 1, rng)[0]))


def sample_simple_batch(d: int, N: int, n: int, rng: np.random.Generator) -> np.ndarray:
    return _indices_to_codes(rng.integers(0, 2 * d, size=(n, N)))


def _saw_flags(d: int, codes: np.ndarray) -> np.ndarray:
    N = codes.shape[1]
    if (2 * N + 1) ** d < 2**62:
        idx = 2 * (np.abs(codes) - 1) + (codes < 0)
        return _kernels.saw_rows(d, idx.astype(np.int64))
    return np.array([is_self_avoiding(Path(d, tuple(row))) for row in codes], dtype=bool)


class SawSample(NamedTuple):
    path: Path
    attempts: int

    @property
    def acceptance_rate(self) -> float:
        return 1.0 / self.attempts


def sample_uniform_saws(
    d: int, N: int, n: int, rng: np.random.Generator, max_attempts: int = 10**8
) -> tuple[np.ndarray, int]:
    """``n`` exact uniform draws from S_N by rejection of pi1 walks.

    Returns the (n, N) code array and the number of pi1 proposals consumed.
    """
    out = np.empty((n, N), dtype=np.int64)
    got = 0
    attempts = 0
    batch = 64
    while got < n:
        if attempts >= max_attempts:
            raise RejectionBudgetExceeded(attempts)
        size = min(batch, max_attempts - attempts)
        proposals = sample_pi1_batch(d, N, size, rng)
        ok = np.flatnonzero(_saw_flags(d, proposals))
        need = n - got
        if len(ok) >= need:
            take = ok[:need]
            attempts += int(take[-1]) + 1
        else:
            take = ok
            attempts += size
        out[got:got + len(take)] = proposals[take]
        got += len(take)
        batch = min(batch * 2, 1 << 14)
    return out, attempts


def sample_uniform_saw(d: int, N: int, rng: np.random.Generator, max_attempts: int = 10**8) -> SawSample:
    codes, attempts = sample_uniform_saws(d, N, 1, rng, max_attempts)
    return SawSample(Path(d, tuple(codes[0])), attempts)


# -- pi2 exact law and change of measure ----------------------------------------

def pi2_choice_counts(path: Path) -> list[int]:
    """Number of admissible pi2 moves before each step of ``path``.

    Raises if the path is not a possible pi2 trajectory.
    """
    d = path.d
    s = path.sites
    counts = []
    for k in range(path.N):
        excluded = set()
        if k >= 1:
            excluded.add(s[k - 1])
        if k >= 3 and sum(abs(a - b) for a, b in zip(s[k], s[k - 3])) == 1:
            excluded.add(s[k - 3])
        if s[k + 1] in excluded:
            raise ValueError(f"step {k + 1} is not an admissible pi2 move")
        counts.append(2 * d - len(excluded))
    return counts


def pi2_path_probability(path: Path) -> Fraction:
    prob = Fraction(1)
    for c in pi2_choice_counts(path):
        prob /= c
    return prob


def enumerate_pi2_law(d: int, N: int) -> list[tuple[Path, Fraction]]:
    """Every leaf of the pi2 decision tree with its exact probability."""
    leaves: list[tuple[Path, Fraction]] = []
    sites = [origin(d)]
    steps: list[int] = []

    def rec(prob: Fraction) -> None:
        k = len(steps)
        if k == N:
            leaves.append((Path(d, tuple(steps)), prob))
            return
        excluded = set()
        if k >= 1:
            excluded.add(sites[k - 1])
        if k >= 3 and sum(abs(a - b) for a, b in zip(sites[k], sites[k - 3])) == 1:
            excluded.add(sites[k - 3])
        moves = [c for c in direction_codes(d) if step(sites[k], c) not in excluded]
        for c in moves:
            sites.append(step(sites[k], c))
            steps.append(c)
            rec(prob / len(moves))
            sites.pop()
            steps.pop()

    rec(Fraction(1))
    return leaves


def u_turns_before_last(path: Path) -> int:
    """|U_{N-1}|: U-turn indices n in [3, N-1]."""
    s = path.sites
    return sum(
        1 for n in range(3, path.N) if sum(abs(a - b) for a, b in zip(s[n], s[n - 3])) == 1
    )


def resolve_pi2_direction(d: int = 2, N: int = 5) -> Fraction:
    """The ratio r with pi2(path) proportional to r^{|U_{N-1}|}, from exact enumeration.

    Raises if the enumerated law is not of that form.
    """
    leaves = enumerate_pi2_law(d, N)
    if sum(p for _, p in leaves) != 1:
        raise AssertionError("pi2 decision tree does not normalise")
    by_u: dict[int, set[Fraction]] = {}
    for path, prob in leaves:
        by_u.setdefault(u_turns_before_last(path), set()).add(prob)
    if any(len(v) != 1 for v in by_u.values()):
        raise AssertionError("pi2 probability is not a function of |U_{N-1}|")
    ks = sorted(by_u)
    if len(ks) < 2:
        raise ValueError(f"no U-turn variation at d={d}, N={N}; pick a larger N")
    probs = {k: next(iter(by_u[k])) for k in ks}
    ratio = probs[ks[1]] / probs[ks[0]]
    if ks[1] - ks[0] != 1:
        raise AssertionError("expected consecutive U-turn counts")
    for k in ks:
        if probs[k] != probs[ks[0]] * ratio ** (k - ks[0]):
            raise AssertionError("pi2 law is not geometric in |U_{N-1}|")
    return ratio


def rn_weight_pi2_exact(path: Path) -> Fraction:
    """Unnormalised d(pi2_N)/d(pi2) at ``path`` as an exact rational."""
    pi2_choice_counts(path)
    d = path.d
    base = Fraction(2 * d - 2, 2 * d - 1)
    return base ** (RN_EXPONENT_SIGN * u_turns_before_last(path))


def rn_weight_pi2(path: Path) -> float:
    """((2d-2)/(2d-1))^{|U_{N-1}|}: change-of-measure weight from pi2 to uniform on S^4_N."""
    pi2_choice_counts(path)
    d = path.d
    return ((2 * d - 2) / (2 * d - 1)) ** (RN_EXPONENT_SIGN * u_turns_before_last(path))


class ISEstimate(NamedTuple):
    mean: float
    stderr: float
    ess: float
    n: int


def importance_sampled_mean(
    f: Callable[[np.ndarray], np.ndarray], d: int, N: int, n: int, rng: np.random.Generator
) -> ISEstimate:
    """Self-normalised estimate of E_{pi2_N}[f] from pi2 proposals.

    ``f`` maps an (n, N) array of step codes to n values.
    """
    codes = sample_pi2_batch(d, N, n, rng)
    u = u_turn_counts(d, codes, include_last=False)
    logw = RN_EXPONENT_SIGN * u * math.log((2 * d - 2) / (2 * d - 1))
    w = np.exp(logw - logw.max())
    vals = np.asarray(f(codes), dtype=float)
    wsum = w.sum()
    mean = float((w * vals).sum() / wsum)
    stderr = float(np.sqrt((w**2 * (vals - mean) ** 2).sum()) / wsum)
    ess = float(wsum**2 / (w**2).sum())
    return ISEstimate(mean, stderr, ess, n)


def u_turn_counts(d: int, codes: np.ndarray, include_last: bool = True) -> np.ndarray:
    """|U_N| (or |U_{N-1}| with ``include_last=False``) for each row of step codes."""
    n, N = codes.shape
    unit = np.zeros((2 * d + 1, d), dtype=np.int64)
    for c in direction_codes(d):
        unit[c, abs(c) - 1] = 1 if c > 0 else -1
    sites = np.zeros((n, N + 1, d), dtype=np.int64)
    sites[:, 1:] = np.cumsum(unit[codes], axis=1)
    hi = N + 1 if include_last else N
    if hi <= 3:
        return np.zeros(n, dtype=np.int64)
    dist = np.abs(sites[:, 3:hi] - sites[:, 0:hi - 3]).sum(axis=-1)
    return (dist == 1).sum(axis=1)


# -- analytic bounds ------------------------------------------------------------

@dataclass(frozen=True)
class RateFunctionInput:
    p: float
    x: float

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")
        if not 0 <= self.x <= 1:
            raise ValueError(f"x must lie in [0, 1], got {self.x}")


def rate_function(p, x: float | None = None) -> float:
    """Cramer rate h_p(x) = x log(x/p) + (1-x) log((1-x)/(1-p)) for Bernoulli(p)."""
    inp = p if isinstance(p, RateFunctionInput) else RateFunctionInput(p, x)
    p, x = inp.p, inp.x
    out = 0.0
    if x > 0:
        out += x * math.log(x / p)
    if x < 1:
        out += (1 - x) * math.log((1 - x) / (1 - p))
    return max(out, 0.0)


def mcdiarmid_tail(x: float, n_vars: int, lipschitz: float = 1.0) -> float:
    """exp(-2 x^2 / (n L^2)): bounded-differences one-sided tail bound."""
    if x < 0 or n_vars < 1 or lipschitz <= 0:
        raise ValueError("need x >= 0, n_vars >= 1, lipschitz > 0")
    return math.exp(-2.0 * x * x / (n_vars * lipschitz**2))


def non_backtracking_count(d: int, N: int) -> int:
    return 2 * d * (2 * d - 1) ** (N - 1) if N >= 1 else 1


def pi1_saw_probability_exact(d: int, N: int, **kw) -> Fraction:
    """pi1(path is self-avoiding) = |S_N| / (2d (2d-1)^{N-1})."""
    return Fraction(count_saw(d, N, **kw), non_backtracking_count(d, N))


def u_turn_rate_pi1(d: int) -> float:
    """Per-index U-turn probability under pi1: 2(d-1)/(2d-1)^2."""
    return 2 * (d - 1) / (2 * d - 1) ** 2


# -- census statistics under a law ----------------------------------------------

STATS_FIELDS = ("trial", "N", "U", "U1", "U2", "T", "V1", "V2", "W1", "W2", "tau2_count")


@dataclass(frozen=True)
class WalkStats:
    trial: int
    N: int
    U: int
    U1: int
    U2: int
    T: int
    V1: int
    V2: int
    W1: int
    W2: int
    tau2_count: int


def u_split(path: Path) -> tuple[int, int]:
    """(U1, U2): U-turn indicators summed over even indices 4..2floor((N-1)/2)
    and odd indices 3..2floor(N/2)-1. Together they cover U ∩ [3, N-1]."""
    s = path.sites
    N = path.N

    def h(n: int) -> int:
        return int(sum(abs(a - b) for a, b in zip(s[n], s[n - 3])) == 1)

    u1 = sum(h(2 * i) for i in range(2, (N - 1) // 2 + 1))
    u2 = sum(h(2 * i + 1) for i in range(1, N // 2))
    return u1, u2


def tau2_times(path: Path, W1: Iterable[int] | None = None) -> list[int]:
    """Stopping times tau2_1 < tau2_2 < ... up to N.

    tau2_{k+1} = min{n >= tau2_k + 2 : some m < n-2 has |S_n - S_m| = 2 and
    neither n nor n-1 is in W1}.
    """
    s = path.sites
    N = path.N
    if W1 is None:
        W1 = raw_census(path).W1
    w1 = set(W1)
    times = []
    prev = 0
    n = 2
    while n <= N:
        hit = (
            n not in w1
            and (n - 1) not in w1
            and any(sum(abs(a - b) for a, b in zip(s[n], s[m])) == 2 for m in range(n - 2))
        )
        if hit:
            times.append(n)
            prev = n
            n = prev + 2
        else:
            n += 1
    return times


def walk_stats(path: Path, trial: int = 0) -> WalkStats:
    c = raw_census(path)
    u1, u2 = u_split(path)
    return WalkStats(
        trial, path.N, len(c.U), u1, u2, len(c.T), len(c.V1), len(c.V2),
        len(c.W1), len(c.W2), len(tau2_times(path, c.W1)),
    )


def _batch_for(law: WalkLaw, n: int, rng) -> np.ndarray:
    if law.kind == "pi1":
        return sample_pi1_batch(law.d, law.N, n, rng)
    if law.kind == "pi2":
        return sample_pi2_batch(law.d, law.N, n, rng)
    return sample_simple_batch(law.d, law.N, n, rng)


def u_statistics_under(
    law: WalkLaw | Callable[[np.random.Generator], Path],
    N: int | None = None,
    trials: int = 1,
    rng: np.random.Generator | None = None,
) -> list[WalkStats]:
    """Per-trial census sizes of walks drawn from ``law``.

    ``law`` may also be a callable ``rng -> Path`` for custom (e.g.
    deterministic) walks.
    """
    if rng is None:
        rng = rng_stream(0)
    if callable(law) and not isinstance(law, WalkLaw):
        return [walk_stats(law(rng), t) for t in range(trials)]
    if N is not None and N != law.N:
        law = WalkLaw(law.kind, law.d, N)
    codes = _batch_for(law, trials, rng)
    return [walk_stats(Path(law.d, tuple(row)), t) for t, row in enumerate(codes)]


def stats_to_csv(records: Sequence[WalkStats]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=STATS_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow(asdict(r))
    return buf.getvalue()
