import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from sawperc.oracles import bernoulli_rate_legendre
from sawperc.paths import Path, count_saw, count_saw_no4, is_self_avoiding, raw_census
from sawperc.refwalks import (
    RateFunctionInput,
    RejectionBudgetExceeded,
    WalkLaw,
    enumerate_pi2_law,
    importance_sampled_mean,
    mcdiarmid_tail,
    non_backtracking_count,
    pi1_saw_probability_exact,
    pi2_choice_counts,
    pi2_path_probability,
    rate_function,
    resolve_pi2_direction,
    rn_weight_pi2,
    rn_weight_pi2_exact,
    rng_stream,
    sample_pi1_batch,
    sample_pi2_batch,
    sample_simple_batch,
    sample_uniform_saw,
    sample_uniform_saws,
    stats_to_csv,
    tau2_times,
    u_split,
    u_statistics_under,
    u_turn_counts,
    u_turn_rate_pi1,
    u_turns_before_last,
    walk_stats,
)


def test_rng_stream_is_deterministic_and_keyed():
    a = rng_stream(7, 3).random(5)
    assert np.array_equal(a, rng_stream(7, 3).random(5))
    assert not np.array_equal(a, rng_stream(7, 4).random(5))
    assert not np.array_equal(a, rng_stream(8, 3).random(5))


def test_walk_law_validation():
    with pytest.raises(ValueError):
        WalkLaw("levy", 2, 5)
    with pytest.raises(ValueError):
        WalkLaw("pi1", 2, 0)


def test_pi1_is_non_backtracking_and_simple_is_not():
    c = sample_pi1_batch(3, 40, 500, rng_stream(1))
    assert c.shape == (500, 40)
    assert not (c[:, 1:] == -c[:, :-1]).any()
    s = sample_simple_batch(3, 40, 500, rng_stream(1))
    assert (s[:, 1:] == -s[:, :-1]).any()
    assert set(np.unique(s)) <= {-3, -2, -1, 1, 2, 3}


def test_pi2_avoids_closing_squares():
    codes = sample_pi2_batch(2, 30, 300, rng_stream(2))
    for row in codes[:50]:
        pi2_choice_counts(Path(2, tuple(row)))  # raises on an inadmissible step
    with pytest.raises(ValueError):
        sample_pi2_batch(1, 5, 1, rng_stream(0))


@pytest.mark.parametrize("d,N", [(2, 4), (2, 7), (3, 5)])
def test_pi2_law_normalises_and_covers_no4(d, N):
    leaves = enumerate_pi2_law(d, N)
    assert sum(p for _, p in leaves) == 1
    assert len(leaves) == count_saw_no4(d, N)
    for path, prob in leaves[:200]:
        assert pi2_path_probability(path) == prob


def test_pi2_direction_resolution():
    assert resolve_pi2_direction(2, 5) == Fraction(3, 2)
    assert resolve_pi2_direction(3, 5) == Fraction(5, 4)


@pytest.mark.parametrize("d,N", [(2, 6), (3, 5)])
def test_rn_weight_flattens_pi2(d, N):
    vals = {prob * rn_weight_pi2_exact(path) for path, prob in enumerate_pi2_law(d, N)}
    assert len(vals) == 1
    path = enumerate_pi2_law(d, N)[-1][0]
    assert rn_weight_pi2(path) == pytest.approx(float(rn_weight_pi2_exact(path)))


def test_uniform_saws_are_saws_and_uniform():
    codes, attempts = sample_uniform_saws(2, 3, 7200, rng_stream(3))
    assert attempts >= 7200
    counts = Counter(tuple(r) for r in codes)
    assert len(counts) == count_saw(2, 3) == 36
    p = stats.chisquare(list(counts.values())).pvalue
    assert p > 1e-4


def test_uniform_saw_single_and_budget():
    s = sample_uniform_saw(3, 25, rng_stream(4))
    assert is_self_avoiding(s.path) and s.path.N == 25
    assert 0 < s.acceptance_rate <= 1
    with pytest.raises(RejectionBudgetExceeded):
        sample_uniform_saws(2, 200, 1, rng_stream(0), max_attempts=100)


def test_pi1_saw_probability():
    assert pi1_saw_probability_exact(2, 2) == 1
    assert pi1_saw_probability_exact(2, 4) == Fraction(100, 108)
    assert non_backtracking_count(3, 0) == 1
    codes = sample_pi1_batch(2, 4, 20000, rng_stream(5))
    frac = np.mean([is_self_avoiding(Path(2, tuple(r))) for r in codes])
    assert abs(frac - 100 / 108) < 4 * math.sqrt(0.07 / 20000)


def test_u_turn_rate_under_pi1():
    d, N, n = 4, 60, 4000
    codes = sample_pi1_batch(d, N, n, rng_stream(6))
    u = u_turn_counts(d, codes)
    rate = u.sum() / (n * (N - 2))
    q = u_turn_rate_pi1(d)
    assert abs(rate - q) < 5 * math.sqrt(q / (n * (N - 2)))


@given(st.integers(2, 4), st.integers(1, 25), st.integers(0, 10**6))
def test_u_turn_counts_match_census(d, N, seed):
    codes = sample_pi1_batch(d, N, 3, rng_stream(seed))
    full = u_turn_counts(d, codes)
    head = u_turn_counts(d, codes, include_last=False)
    for row, a, b in zip(codes, full, head):
        path = Path(d, tuple(row))
        U = raw_census(path).U
        assert a == len(U)
        assert b == u_turns_before_last(path) == len([n for n in U if n < N])
        u1, u2 = u_split(path)
        assert u1 + u2 == b


@given(st.integers(2, 4), st.integers(2, 40), st.integers(0, 10**6))
def test_tau2_times_are_spaced(d, N, seed):
    path = Path(d, tuple(sample_pi1_batch(d, N, 1, rng_stream(seed))[0]))
    t = tau2_times(path)
    assert all(b - a >= 2 for a, b in zip(t, t[1:]))
    assert all(2 <= x <= N for x in t)


def test_importance_sampling_constant_and_weights():
    est = importance_sampled_mean(lambda c: np.ones(len(c)), 2, 10, 500, rng_stream(8))
    assert est.mean == pytest.approx(1.0) and est.stderr == pytest.approx(0.0, abs=1e-12)
    assert 0 < est.ess <= 500


def test_importance_sampling_recovers_uniform_no4_mean():
    d, N = 2, 7
    leaves = enumerate_pi2_law(d, N)
    exact = np.mean([u_turns_before_last(p) for p, _ in leaves])
    est = importance_sampled_mean(lambda c: u_turn_counts(d, c, include_last=False), d, N, 20000, rng_stream(9))
    assert abs(est.mean - exact) < 4 * est.stderr


def test_rate_function():
    assert rate_function(0.3, 0.3) == 0.0
    assert rate_function(0.5, 1.0) == pytest.approx(math.log(2))
    assert rate_function(RateFunctionInput(0.2, 0.0)) == pytest.approx(-math.log(0.8))
    for p, x in [(0.0, 0.5), (1.0, 0.5), (0.5, 1.5), (0.5, -0.1)]:
        with pytest.raises(ValueError):
            rate_function(p, x)


@given(st.floats(0.01, 0.99), st.floats(0.0, 1.0))
def test_rate_function_is_legendre_transform(p, x):
    x = min(max(x, 0.005), 0.995)
    assert rate_function(p, x) == pytest.approx(bernoulli_rate_legendre(p, x), rel=1e-6, abs=1e-9)


def test_mcdiarmid_tail():
    assert mcdiarmid_tail(0.0, 10) == 1.0
    assert mcdiarmid_tail(10.0, 50) == pytest.approx(math.exp(-4))
    assert mcdiarmid_tail(10.0, 50, 2.0) == pytest.approx(math.exp(-1))
    with pytest.raises(ValueError):
        mcdiarmid_tail(1.0, 0)


def test_walk_statistics_and_csv():
    recs = u_statistics_under(WalkLaw("pi1", 3, 30), trials=5, rng=rng_stream(10))
    assert [r.trial for r in recs] == list(range(5))
    assert all(r.U1 + r.U2 <= r.U for r in recs)
    again = u_statistics_under(WalkLaw("pi1", 3, 10), N=30, trials=5, rng=rng_stream(10))
    assert again == recs
    text = stats_to_csv(recs)
    assert text.splitlines()[0] == "trial,N,U,U1,U2,T,V1,V2,W1,W2,tau2_count"
    assert len(text.splitlines()) == 6


def test_walk_statistics_with_deterministic_walk():
    straight = lambda rng: Path.straight(2, 12)
    (r,) = u_statistics_under(straight, trials=1)
    assert (r.U, r.T, r.V2, r.tau2_count) == (0, 10, 13, 0)
    assert walk_stats(Path(2, (1, 2, -1)), trial=3).U == 1
