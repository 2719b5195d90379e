"""Expansion evaluators, Monte Carlo experiments and the verification suite.

Trials are keyed by (master seed, trial index): the spine stream is
``rng_stream(seed, trial)`` and environment seeds come from
``SeedSequence([seed, trial, attempt])``. Workers only change who computes a
trial, never its value, and results are reduced in trial order.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Callable, Iterable, Sequence

import numpy as np
import sympy as sp

from . import _kernels, environment, refwalks
from .bridges import (
    DEFAULT_CAP,
    InjectionViolation,
    a0_lower_bound,
    bridge_squares,
    count_lower_bound,
    detect_bridges,
    enumerate_selected_paths,
    log2_lower_bound,
    overlap_audit,
)
from .environment import Environment
from .lattice import Edge, ball_edges, canonical_edge, direction_codes, step
from .oracles import bernoulli_rate_legendre, bridge_sets_bruteforce, saw_count_bruteforce
from .paths import (
    Path,
    census,
    count_open_saw,
    count_saw,
    enumerate_paths,
    is_good_spine,
    open_path_counts,
    raw_census,
)
from .sizebias import (
    environment_seed,
    partition_law_exact,
    reweighting_discrepancy,
    size_biased_law_exact,
    spine_law_exact,
)

LOG2 = math.log(2)
EPS_MAX = 2 + 3 * LOG2


# -- closed-form expansions -------------------------------------------------------

def _check_d(d: int) -> None:
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")


def threshold_bound(d: int, eps=0.0, exact: bool = False):
    """1/(2d) + 1/(2d)^2 + (2 + 3 log 2 - eps)/(2d)^3.

    With ``exact`` the value is a sympy expression (pass ``eps`` as a Rational
    or sympy number to keep it exact).
    """
    _check_d(d)
    if not 0 <= float(eps) < EPS_MAX:
        raise ValueError(f"eps must lie in [0, 2 + 3 log 2), got {eps}")
    if exact:
        x = sp.Rational(1, 2 * d)
        return x + x**2 + (2 + 3 * sp.log(2) - sp.nsimplify(eps)) * x**3
    x = 1.0 / (2 * d)
    return x + x * x + (EPS_MAX - eps) * x**3


def pc_expansion(d: int, exact: bool = False):
    """1/(2d) + 1/(2d)^2 + (7/2)/(2d)^3; the O(d^-4) remainder is dropped."""
    _check_d(d)
    if exact:
        x = sp.Rational(1, 2 * d)
        return x + x**2 + sp.Rational(7, 2) * x**3
    x = 1.0 / (2 * d)
    return x + x * x + 3.5 * x**3


def threshold_gap_exact(d: int, eps) -> sp.Expr:
    return sp.expand(threshold_bound(d, eps, exact=True) - pc_expansion(d, exact=True))


def threshold_gap_formula(d: int, eps) -> sp.Expr:
    return (3 * sp.log(2) - sp.Rational(3, 2) - sp.nsimplify(eps)) / sp.Integer(2 * d) ** 3


def mu_expansion(d: int) -> float:
    """2d - 1 - 1/(2d), truncated before the O(d^-2) term."""
    _check_d(d)
    return 2 * d - 1 - 1 / (2 * d)


def mu4_expansion(d: int) -> float:
    """Same truncation for walks with no four-loops."""
    _check_d(d)
    return 2 * d - 1 - 1 / (2 * d)


def castor_shadow(d: int, N_max: int = 10) -> list[tuple[int, Fraction]]:
    """[(N, |S_N| / (2d (2d-1)^{N-1}))] for N in [1, N_max], exact."""
    return [
        (N, Fraction(count_saw(d, N), 2 * d * (2 * d - 1) ** (N - 1)))
        for N in range(1, N_max + 1)
    ]


def castor_rates(d: int, N_max: int = 10) -> list[tuple[int, Fraction]]:
    """Ratios of consecutive shadow terms: (N, term_N / term_{N-1})."""
    terms = castor_shadow(d, N_max)
    return [(n, t / s) for (_, s), (n, t) in zip(terms, terms[1:])]


def castor_band(d: int, K: float = 8.0) -> tuple[float, float]:
    x = 1.0 / (2 * d)
    return 1 - x * x - K * x**3, 1 - x * x + K * x**3


def feasible_N(d: int, budget: int = 2 * 10**7, N_cap: int = 16) -> int:
    """Largest N <= N_cap whose non-backtracking tree fits in ``budget`` nodes."""
    N = 1
    while N < N_cap and (2 * d - 1) ** N <= budget:
        N += 1
    return N


@dataclass(frozen=True)
class AnnealedConstant:
    value: float
    mu_hat: float
    N_star: int


def annealed_constant(d: int, p: float, N_star: int | None = None) -> AnnealedConstant:
    """p * |S_{N*}|^{1/N*} at the largest feasible N* (or the given one)."""
    if N_star is None:
        N_star = feasible_N(d)
    mu_hat = count_saw(d, N_star) ** (1.0 / N_star)
    return AnnealedConstant(p * mu_hat, mu_hat, N_star)


def binomial_central_bounds_hold(m_max: int = 64, C: int = 4) -> bool:
    """4^m / (C m) <= sum_k C(m,k)^2 <= 4^m for 1 <= m <= m_max."""
    return all(
        Fraction(4**m, C * m) <= math.comb(2 * m, m) <= 4**m for m in range(1, m_max + 1)
    )


# -- configuration and records ----------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 3
    N: int = 20
    p: float = 0.5
    eps: float = 0.5
    trials: int = 100
    seed: int = 0
    workers: int = 1
    max_restarts: int = 64
    validate_every: int = 10
    fmt: str = "csv"

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if not 0 <= self.p <= 1:
            raise ValueError("p must lie in [0, 1]")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.N < 1:
            raise ValueError("N must be >= 1")


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    values: dict


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def records_to_csv(records: Sequence[TrialRecord], fields: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in records:
        row = {"trial": r.trial, **r.values}
        w.writerow([_fmt(row[f]) for f in fields])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, float):
        return float(_fmt(x))
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=1, sort_keys=True) + "\n"


def parallel_map(fn: Callable, items: Iterable, workers: int = 1) -> list:
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def _summary(values: Sequence[float]) -> dict:
    a = np.asarray(values, dtype=float)
    q = np.quantile(a, [0.05, 0.5, 0.95]) if len(a) else [math.nan] * 3
    return {
        "mean": float(a.mean()) if len(a) else math.nan,
        "stderr": float(a.std(ddof=1) / math.sqrt(len(a))) if len(a) > 1 else math.nan,
        "q05": float(q[0]), "median": float(q[1]), "q95": float(q[2]),
    }


# -- quenched growth ---------------------------------------------------------------

class NoPercolatingStart(RuntimeError):
    pass


def _quenched_trial(args) -> TrialRecord:
    d, N, p, seed, trial, max_restarts = args
    for attempt in range(max_restarts):
        env = Environment(p, environment_seed(seed, trial, attempt))
        counts = open_path_counts(env, N, d=d)
        if counts[N] > 0:
            return TrialRecord(trial, {"attempt": attempt, "counts": [int(c) for c in counts]})
    raise NoPercolatingStart(
        f"trial {trial}: no start with Z_{N} > 0 after {max_restarts} environment restarts"
    )


QUENCHED_FIELDS = ("trial", "attempt", "n", "Z", "root", "ratio_exact", "ratio_proxy")


@dataclass
class QuenchedReport:
    config: ExperimentConfig
    annealed: AnnealedConstant
    records: list[TrialRecord]
    saw_counts: dict = field(default_factory=dict)

    def rows(self) -> list[TrialRecord]:
        out = []
        p, N = self.config.p, self.config.N
        for r in self.records:
            for n in range(1, N + 1):
                z = r.values["counts"][n]
                root = z ** (1.0 / n) if z > 0 else 0.0
                exact = self.saw_counts.get(n)
                ratio_exact = root / (p * exact ** (1.0 / n)) if exact and p > 0 else math.nan
                ratio_proxy = root / self.annealed.value if self.annealed.value > 0 else math.nan
                out.append(TrialRecord(r.trial, {
                    "attempt": r.values["attempt"], "n": n, "Z": z, "root": root,
                    "ratio_exact": ratio_exact, "ratio_proxy": ratio_proxy,
                }))
        return out

    def final_ratios(self) -> list[float]:
        N = self.config.N
        return [r.values["ratio_exact"] for r in self.rows() if r.values["n"] == N]

    def to_csv(self) -> str:
        return records_to_csv(self.rows(), QUENCHED_FIELDS)

    def to_json(self) -> str:
        ratios = [x for x in self.final_ratios() if not math.isnan(x)]
        return dumps({
            "config": asdict(self.config),
            "annealed_constant": asdict(self.annealed),
            "final_ratio_exact": _summary(ratios) if ratios else None,
            "trials": [{"trial": r.trial, **r.values} for r in self.records],
        })


def run_quenched_estimate(config: ExperimentConfig, exact_budget: int = 10**8) -> QuenchedReport:
    """Z_N^{1/N} sequences from the origin of sampled environments, with ratios.

    ``ratio_exact`` divides by p |S_n|^{1/n} at the same n (when |S_n| is
    countable within ``exact_budget``); ``ratio_proxy`` by the annealed constant.
    """
    d, N, p = config.d, config.N, config.p
    if p <= pc_expansion(d):
        warnings.warn(f"p={p} is not above the expansion of p_c(d={d}); expect restarts")
    tasks = [(d, N, p, config.seed, t, config.max_restarts) for t in range(config.trials)]
    records = parallel_map(_quenched_trial, tasks, config.workers)
    saw = {}
    for n in range(1, N + 1):
        if (2 * d - 1) ** (n - 1) > exact_budget:
            break
        saw[n] = count_saw(d, n)
    return QuenchedReport(config, annealed_constant(d, p), records, saw)


# -- good spines -------------------------------------------------------------------

def sample_spine(d: int, N: int, seed: int, trial: int) -> Path:
    codes, _ = refwalks.sample_uniform_saws(d, N, 1, refwalks.rng_stream(seed, trial))
    return Path(d, tuple(int(c) for c in codes[0]))


GOOD_SPINE_FIELDS = ("trial", "N", "d", "U", "T", "V1", "V2", "good")


def _good_spine_trial(args) -> TrialRecord:
    d, N, eps, seed, trial = args
    spine = sample_spine(d, N, seed, trial)
    c = census(spine)
    return TrialRecord(trial, {
        "N": N, "d": d, "U": len(c.U), "T": len(c.T), "V1": len(c.V1), "V2": len(c.V2),
        "good": int(is_good_spine(spine, eps, c)),
    })


@dataclass
class GoodSpineReport:
    config: ExperimentConfig
    records: list[TrialRecord]

    def summary(self) -> dict:
        N = self.config.N
        out = {"p_good": float(np.mean([r.values["good"] for r in self.records]))}
        for k in ("U", "T", "V1", "V2"):
            out[k + "/N"] = _summary([r.values[k] / N for r in self.records])
        return out

    def to_csv(self) -> str:
        return records_to_csv(self.records, GOOD_SPINE_FIELDS)

    def to_json(self) -> str:
        return dumps({"config": asdict(self.config), "summary": self.summary()})


def run_good_spine_experiment(config: ExperimentConfig) -> GoodSpineReport:
    tasks = [(config.d, config.N, config.eps, config.seed, t) for t in range(config.trials)]
    return GoodSpineReport(config, parallel_map(_good_spine_trial, tasks, config.workers))


# -- bridges -----------------------------------------------------------------------

def sample_good_spine(d: int, N: int, eps: float, seed: int, trial: int, max_tries: int = 1000) -> tuple[Path, int]:
    """First good spine from the trial's stream; returns (spine, tries used)."""
    rng = refwalks.rng_stream(seed, trial)
    for tries in range(1, max_tries + 1):
        codes, _ = refwalks.sample_uniform_saws(d, N, 1, rng)
        spine = Path(d, tuple(int(c) for c in codes[0]))
        if is_good_spine(spine, eps):
            return spine, tries
    raise RuntimeError(f"no good spine in {max_tries} tries (d={d}, N={N}, eps={eps})")


def lowb_floor_check(n_a: int, n_b: int, n_c: int, C: int = 4) -> bool:
    """log2 N_{a,b,c} >= a + 2m - log2(C m) with m = min(b, c)."""
    m = min(n_b, n_c)
    lhs = log2_lower_bound(n_a, n_b, n_c)
    rhs = n_a + (2 * m - math.log2(C * m) if m > 0 else 0)
    return lhs >= rhs - 1e-9


BRIDGE_FIELDS = ("trial", "N", "p", "d", "sizeA", "sizeB", "sizeC", "floor_log2")


def _bridge_trial(args) -> TrialRecord:
    d, N, p, eps, seed, trial, validate, cap = args
    spine, tries = sample_good_spine(d, N, eps, seed, trial)
    env = Environment(p, environment_seed(seed, trial))
    sets = detect_bridges(env, spine)
    a, b, c = sets.sizes
    values = {
        "N": N, "p": p, "d": d, "sizeA": a, "sizeB": b, "sizeC": c,
        "floor_log2": log2_lower_bound(a, b, c), "tries": tries,
        "lowb_ok": lowb_floor_check(a, b, c), "validated": 0, "violation": "",
    }
    if validate:
        try:
            enum = enumerate_selected_paths(spine, sets, cap=cap, env=env, truncate=True)
            values["validated"] = enum.count
        except InjectionViolation as exc:
            values["violation"] = str(exc)
    return TrialRecord(trial, values)


@dataclass
class BridgeReport:
    config: ExperimentConfig
    records: list[TrialRecord]

    def summary(self) -> dict:
        N, d = self.config.N, self.config.d
        target = (2 * d) ** -2
        out = {"target_per_N": target, "floor_target_per_N": 3 * target}
        for k in ("sizeA", "sizeB", "sizeC"):
            out[k + "/N"] = _summary([r.values[k] / N for r in self.records])
        out["floor_log2/N"] = _summary([r.values["floor_log2"] / N for r in self.records])
        out["lowb_ok"] = all(r.values["lowb_ok"] for r in self.records)
        out["validated_paths"] = sum(r.values["validated"] for r in self.records)
        out["violations"] = [r.values["violation"] for r in self.records if r.values["violation"]]
        return out

    def to_csv(self) -> str:
        return records_to_csv(self.records, BRIDGE_FIELDS)

    def to_json(self) -> str:
        return dumps({"config": asdict(self.config), "summary": self.summary()})


def run_bridge_experiment(config: ExperimentConfig, cap: int = 1 << 10) -> BridgeReport:
    """Bridge-set sizes and log2 floors on sampled good spines."""
    ve = config.validate_every
    tasks = [
        (config.d, config.N, config.p, config.eps, config.seed, t, ve > 0 and t % ve == 0, cap)
        for t in range(config.trials)
    ]
    return BridgeReport(config, parallel_map(_bridge_trial, tasks, config.workers))


def c_influence_edges(spine: Path) -> set[Edge]:
    """E_S: edges (S_n, S_n+e) and (S_n+e, S_{n+1}+e) whose states can move |C|."""
    S = spine.sites
    out = set()
    for n, s in enumerate(S):
        for e in direction_codes(spine.d):
            out.add(canonical_edge(s, step(s, e)))
            if n < spine.N:
                out.add(canonical_edge(step(s, e), step(S[n + 1], e)))
    return out


def _env_sizes(args) -> tuple[int, int, int]:
    spine, p, seed, j = args
    return detect_bridges(Environment(p, environment_seed(seed, 0, j + 1)), spine).sizes


def mcdiarmid_check(
    spine: Path, p: float, seed: int, n_env: int, workers: int = 1, multiples=(2, 3)
) -> dict:
    """Empirical lower tails of |A|, |B|, |C| over fresh environments on a fixed spine.

    Each tail P[X - mean <= -x] at x = k * sd is compared with exp(-2 x^2 / n),
    where n is |A0|, |U| and |E_S| respectively.
    """
    sizes = np.array(parallel_map(_env_sizes, [(spine, p, seed, j) for j in range(n_env)], workers))
    sets = detect_bridges(Environment(p, environment_seed(seed, 0, 0)), spine)
    n_vars = {"A": len(sets.A0), "B": len(census(spine).U), "C": len(c_influence_edges(spine))}
    out = {}
    for i, key in enumerate("ABC"):
        x = sizes[:, i].astype(float)
        mean, sd = float(x.mean()), float(x.std(ddof=1))
        rows = []
        for k in multiples:
            thr = k * sd
            emp = float(np.mean(x - mean <= -thr)) if sd > 0 else 0.0
            bound = refwalks.mcdiarmid_tail(thr, max(n_vars[key], 1))
            rows.append({"k": k, "x": thr, "empirical": emp, "bound": bound, "ok": emp <= bound})
        out[key] = {"n_vars": n_vars[key], "mean": mean, "sd": sd, "tails": rows}
    return out


# -- annealed identity ---------------------------------------------------------------

def annealed_identity_exact(d: int, N: int, p: Fraction) -> tuple[Fraction, Fraction]:
    """(sum_omega P(omega) Z_N(omega), p^N |S_N|) on the relevant-edge set."""
    return partition_law_exact(d, N, p).mean(), p**N * count_saw(d, N)


def annealed_identity_subbox(d: int, N: int, p: Fraction, radius: int = 1) -> tuple[Fraction, Fraction]:
    """Exact E[Z_N] enumerating only the edges of the box [-radius, radius]^d.

    Edges outside the box are integrated out: a path open on the box edges
    contributes p^{#its edges outside the box}.
    """
    box = [
        Edge(base, axis)
        for base in np.ndindex(*(2 * radius + 1,) * d)
        for axis in range(d)
        if base[axis] < 2 * radius
    ]
    box = [Edge(tuple(int(x) - radius for x in e.base), e.axis) for e in box]
    index = {e: i for i, e in enumerate(box)}
    inside, outside = [], []
    for path in enumerate_paths(d, N):
        mask, k = 0, 0
        for e in path.edges():
            if e in index:
                mask |= 1 << index[e]
            else:
                k += 1
        inside.append(mask)
        outside.append(k)
    m = len(box)
    if m > environment.MAX_FINITE_EDGES:
        raise ValueError(f"{m} box edges exceed the exhaustive guard")
    total = Fraction(0)
    weights = [p**j * (1 - p) ** (m - j) for j in range(m + 1)]
    pk = [p**k for k in range(N + 1)]
    for omega in range(1 << m):
        z = sum(pk[k] for mask, k in zip(inside, outside) if omega & mask == mask)
        if z:
            total += weights[omega.bit_count()] * z
    return total, p**N * count_saw(d, N)


def _z_sample(args) -> int:
    d, N, p, seed, t = args
    return count_open_saw(Environment(p, environment_seed(seed, t)), N, d=d)


def annealed_mean_mc(d: int, N: int, p: float, trials: int, seed: int, workers: int = 1) -> dict:
    z = np.array(parallel_map(_z_sample, [(d, N, p, seed, t) for t in range(trials)], workers), dtype=float)
    expected = p**N * count_saw(d, N)
    mean = float(z.mean())
    se = float(z.std(ddof=1) / math.sqrt(trials))
    return {"mean": mean, "stderr": se, "expected": expected,
            "z_score": (mean - expected) / se if se > 0 else 0.0}


# -- pi2 law -----------------------------------------------------------------------

def pi2_law_check(d: int, N: int) -> tuple[bool, str]:
    """pi2(path) * rn_weight(path) is constant over the pi2 support and the
    support equals S^4_N."""
    leaves = refwalks.enumerate_pi2_law(d, N)
    support = {p.steps for p, _ in leaves}
    no4 = {p.steps for p in enumerate_paths(d, N, mode="no4")}
    if support != no4:
        return False, f"pi2 support has {len(support)} paths, S4_N has {len(no4)}"
    products = {prob * refwalks.rn_weight_pi2_exact(p) for p, prob in leaves}
    if len(products) != 1:
        return False, f"pi2 x rn_weight takes {len(products)} distinct values at d={d}, N={N}"
    return True, f"uniform on {len(no4)} paths"


def no4_exact_mean_u(d: int, N: int) -> Fraction:
    paths = list(enumerate_paths(d, N, mode="no4"))
    total = sum(len(raw_census(p).U) for p in paths)
    return Fraction(total, len(paths))


def pi2_is_check(d: int, N: int, n: int, seed: int) -> dict:
    est = refwalks.importance_sampled_mean(
        lambda codes: refwalks.u_turn_counts(d, codes, include_last=True),
        d, N, n, refwalks.rng_stream(seed, 0),
    )
    exact = no4_exact_mean_u(d, N)
    z = (est.mean - float(exact)) / est.stderr
    return {"mean": est.mean, "stderr": est.stderr, "ess": est.ess, "exact": str(exact),
            "exact_float": float(exact), "z_score": z}


# -- hash vectors --------------------------------------------------------------------

def load_hash_vectors() -> list[dict]:
    text = resources.files("sawperc").joinpath("data/hash_vectors.json").read_text()
    return json.loads(text)["vectors"]


def hash_vector_check() -> tuple[bool, str]:
    bad = []
    for v in load_hash_vectors():
        e = Edge(tuple(v["base"]), v["axis"])
        ref = environment.edge_uniform(e, v["seed"])
        fast = int(_kernels.edge_u53(np.array(e.base, dtype=np.int64), e.axis, np.uint64(v["seed"])))
        if ref != v["u53"] or fast != v["u53"]:
            bad.append(f"{e}@{v['seed']}: ref {ref}, kernel {fast}, published {v['u53']}")
    return not bad, "; ".join(bad) if bad else f"{len(load_hash_vectors())} vectors match"


# -- injection audit -------------------------------------------------------------------

def _injection_instance(args) -> dict:
    seed, t, cap = args
    d = 4 + t % 2
    N = 50 + (t * 37) % 151
    p = 1 / (2 * d)
    spine = sample_spine(d, N, seed, t)
    env = Environment(p, environment_seed(seed, t))
    sets = detect_bridges(env, spine)
    out = {"trial": t, "d": d, "N": N, "sizes": list(sets.sizes), "problems": []}
    out["problems"] += overlap_problems(spine, sets)
    if len(sets.A0) < a0_lower_bound(spine):
        out["problems"].append(f"|A0|={len(sets.A0)} below the counting bound")
    try:
        enum = enumerate_selected_paths(spine, sets, cap=cap, env=env, truncate=True)
        out["count"] = enum.count
        out["expected"] = enum.expected
        out["truncated"] = enum.truncated
    except InjectionViolation as exc:
        out["problems"].append(str(exc))
    return out


def overlap_problems(spine: Path, sets) -> list[str]:
    return overlap_audit(spine, bridge_squares(spine, sets))


def injection_audit(n_instances: int, seed: int, cap: int = DEFAULT_CAP, workers: int = 1) -> dict:
    """Seeded instances with d in {4, 5}, N in [50, 200], p = 1/(2d)."""
    res = parallel_map(_injection_instance, [(seed, t, cap) for t in range(n_instances)], workers)
    problems = [f"trial {r['trial']}: {p}" for r in res for p in r["problems"]]
    return {
        "instances": n_instances,
        "paths": sum(r.get("count", 0) for r in res),
        "truncated": sum(1 for r in res if r.get("truncated")),
        "max_expected": max(r.get("expected", 0) for r in res),
        "problems": problems,
    }


def _oracle_instance(args) -> bool:
    seed, t = args
    d, N = 4, 60
    p = 1 / (2 * d) if t % 2 == 0 else 0.3
    spine = sample_spine(d, N, seed, t)
    env = Environment(p, environment_seed(seed, t))
    fast = detect_bridges(env, spine)
    ref = bridge_sets_bruteforce(env, spine)
    return (
        list(fast.A0) == ref["A0"] and [tuple(w) for w in fast.A] == ref["A"]
        and list(fast.B) == ref["B"] and list(fast.C0) == ref["C0"]
        and [tuple(w) for w in fast.C] == ref["C"]
    )


def bridge_oracle_agreement(n_instances: int, seed: int, workers: int = 1) -> list[int]:
    """Trials where the detector and the brute-force oracle disagree."""
    ok = parallel_map(_oracle_instance, [(seed, t) for t in range(n_instances)], workers)
    return [t for t, good in enumerate(ok) if not good]


# -- the verification suite ---------------------------------------------------------

@dataclass
class Case:
    name: str
    status: str
    detail: str


def _case(name: str, fn: Callable[[], tuple[bool, str]]) -> Case:
    try:
        ok, detail = fn()
    except Exception as exc:  # a crashing check is a failing check
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return Case(name, "pass" if ok else "fail", detail)


def _check_saw_counts() -> tuple[bool, str]:
    bad = [(d, N) for d in (2, 3) for N in range(1, 9) if count_saw(d, N) != saw_count_bruteforce(d, N)]
    spots = [count_saw(2, N) for N in (1, 2, 3, 4)] + [count_saw(3, N) for N in (1, 2, 3)]
    ok = not bad and spots == [4, 12, 36, 100, 6, 30, 150]
    return ok, f"mismatches {bad}; spot values {spots}"


def _check_castor(K: float = 8.0) -> tuple[bool, str]:
    lo, hi = castor_band(4, K)
    rates = [(n, r) for n, r in castor_rates(4, 10) if 6 <= n <= 10]
    ok = all(lo <= float(r) <= hi for _, r in rates)
    return ok, f"d=4 band [{lo:.6f}, {hi:.6f}]; rates " + ", ".join(f"{n}:{float(r):.6f}" for n, r in rates)


def _check_annealed_exact() -> tuple[bool, str]:
    out = []
    ok = True
    for d, N in ((2, 1), (2, 2), (3, 1)):
        for p in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
            lhs, rhs = annealed_identity_exact(d, N, p)
            ok &= lhs == rhs
            out.append(f"d={d},N={N},p={p}:{lhs == rhs}")
    lhs, rhs = annealed_identity_subbox(2, 3, Fraction(1, 2))
    ok &= lhs == rhs
    out.append(f"d=2,N=3 sub-box:{lhs == rhs}")
    return ok, " ".join(out)


def _check_spine_lemma() -> tuple[bool, str]:
    out = []
    ok = True
    for p in (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)):
        a, b = size_biased_law_exact(2, 2, p), spine_law_exact(2, 2, p)
        tv = a.tv_distance(b)
        rw = reweighting_discrepancy(2, 2, p)
        ok &= tv == 0 and a.total == 1 and b.total == 1 and rw == 0
        out.append(f"p={p}: tv={tv} reweighting={rw}")
    return ok, "; ".join(out)


def _check_threshold_gap(d_max: int = 64, eps=sp.Rational(1, 10), rtol: float = 1e-15) -> tuple[bool, str]:
    worst = 0.0
    for d in range(2, d_max + 1):
        gap = threshold_gap_exact(d, eps)
        formula = threshold_gap_formula(d, eps)
        if sp.expand(gap - formula) != 0:
            return False, f"symbolic mismatch at d={d}"
        g = sp.N(gap, 40)
        rel = abs(sp.N(formula, 40) - g) / abs(g)
        # float evaluators against the exact value, relative to the bound itself
        fl = abs(threshold_bound(d, float(eps)) - float(sp.N(threshold_bound(d, eps, exact=True), 40)))
        worst = max(worst, float(rel), fl / float(sp.N(threshold_bound(d, eps, exact=True), 40)))
        if g <= 0 or rel > rtol:
            return False, f"gap {g} at d={d}"
    return worst <= rtol, f"d in [2, {d_max}], eps={eps}: positive, worst relative error {worst:.3g}"


def _check_pi2() -> tuple[bool, str]:
    ratio = refwalks.resolve_pi2_direction(2, 5)
    msgs = [f"resolved ratio {ratio}"]
    ok = ratio == Fraction(3, 2)
    for N in (5, 6, 7, 8):
        good, msg = pi2_law_check(2, N)
        ok &= good
        msgs.append(f"N={N}: {msg}")
    return ok, "; ".join(msgs)


def _check_rate() -> tuple[bool, str]:
    worst = 0.0
    for p in (0.1, 0.25, 0.5):
        for x in (0.05, 0.2, 0.5, 0.8):
            worst = max(worst, abs(refwalks.rate_function(p, x) - bernoulli_rate_legendre(p, x)))
    return worst < 1e-8, f"max |closed form - Legendre| = {worst:.3g}"


def _check_monotone_coupling() -> tuple[bool, str]:
    edges = ball_edges(3, 3)
    lo = Environment(0.3, 99).edge_states(edges)
    hi = Environment(0.6, 99).edge_states(edges)
    again = Environment(0.3, 99).edge_states(edges)
    ref = np.array([Environment(0.3, 99).edge_state(e) for e in edges])
    ok = bool(np.all(lo <= hi) and np.array_equal(lo, again) and np.array_equal(lo, ref))
    return ok, f"{len(edges)} edges: repeatable, kernel = reference, monotone in p"


def run_all_verifications(seed: int = 2024, workers: int = 1) -> dict:
    """Every exact oracle plus the seeded Monte Carlo identities; a pass/fail manifest."""
    cases = [
        _case("hash_vectors", hash_vector_check),
        _case("environment_coupling", _check_monotone_coupling),
        _case("saw_counts_oracle", _check_saw_counts),
        _case("castor_shadow_d4", _check_castor),
        _case("annealed_identity_exact", _check_annealed_exact),
        _case("annealed_identity_mc", lambda: (
            lambda r: (abs(r["z_score"]) <= 4, f"mean {r['mean']:.6g} expected {r['expected']:.6g} z {r['z_score']:.3f}")
        )(annealed_mean_mc(3, 10, 0.3, 2000, seed, workers))),
        _case("spine_lemma", _check_spine_lemma),
        _case("bridge_oracle", lambda: (
            lambda bad: (not bad, f"disagreements at trials {bad}" if bad else "200 instances agree")
        )(bridge_oracle_agreement(200, seed, workers))),
        _case("injection_audit", lambda: (
            lambda r: (not r["problems"], f"{r['instances']} instances, {r['paths']} paths built, "
                       f"{r['truncated']} truncated; problems: {r['problems'][:3]}")
        )(injection_audit(200, seed, workers=workers))),
        _case("lowb_constant", lambda: (
            binomial_central_bounds_hold() and count_lower_bound(3, 4, 3) == 280,
            "4^m/(4m) <= C(2m,m) <= 4^m for m <= 64; N(3,4,3) = 280",
        )),
        _case("pi2_law", _check_pi2),
        _case("pi2_importance_sampling", lambda: (
            lambda r: (abs(r["z_score"]) <= 3, f"IS {r['mean']:.6f} +- {r['stderr']:.6f}, exact {r['exact']}")
        )(pi2_is_check(2, 8, 20000, seed))),
        _case("threshold_gap", _check_threshold_gap),
        _case("rate_function", _check_rate),
    ]
    return {"suite": "sawperc-verify", "cases": [asdict(c) for c in cases]}


def manifest_ok(manifest: dict) -> bool:
    return all(c["status"] == "pass" for c in manifest["cases"])
