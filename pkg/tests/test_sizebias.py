import json
import math
from fractions import Fraction
from pathlib import Path as FsPath

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sawperc.environment import Environment, FiniteEnvironment, relevant_edges
from sawperc.lattice import canonical_edge
from sawperc.oracles import size_biased_law_bruteforce
from sawperc.paths import Path, count_open_saw, count_saw
from sawperc.refwalks import rng_stream, sample_uniform_saws
from sawperc.sizebias import (
    Distribution,
    ExhaustiveInstance,
    environment_seed,
    log_saw_count_estimate,
    make_spined,
    partition_law_exact,
    reweighting_discrepancy,
    sample_tilde_partitions,
    size_biased_law_exact,
    spine_lemma_tv,
    spine_law_exact,
    strong_disorder_certificate,
    tilde_partition,
)

FIXTURE = FsPath(__file__).parent / "fixtures" / "size_biased_d2_N2_p1_2.json"
SQUARE = [((0, 0), (1, 0)), ((1, 0), (1, 1)), ((1, 1), (0, 1)), ((0, 1), (0, 0))]


def closed_box(N, d=2, open_pairs=()):
    return FiniteEnvironment.from_open(relevant_edges(N, d=d), [canonical_edge(a, b) for a, b in open_pairs])


def test_size_biased_law_matches_frozen_fixture():
    expected = Distribution.from_json(FIXTURE.read_text())
    got = size_biased_law_exact(2, 2, Fraction(1, 2))
    assert got == expected
    assert got.total == 1


@pytest.mark.parametrize("d,N,p", [(2, 2, Fraction(1, 3)), (3, 1, Fraction(1, 4)), (2, 1, Fraction(7, 10))])
def test_size_biased_law_matches_bruteforce(d, N, p):
    assert size_biased_law_exact(d, N, p).support == size_biased_law_bruteforce(d, N, p)


def test_size_biased_law_extremes():
    assert size_biased_law_exact(2, 2, 1).support == {12: 1}
    with pytest.raises(ValueError):
        size_biased_law_exact(2, 2, 0)


@pytest.mark.parametrize("p", [Fraction(1, 10), Fraction(1, 2), Fraction(9, 10)])
def test_plain_law_is_a_probability_with_mean_one(p):
    law = partition_law_exact(2, 2, p)
    assert law.total == 1
    assert law.mean() == p**2 * count_saw(2, 2)


@pytest.mark.parametrize("d,N,p", [(2, 2, Fraction(1, 2)), (2, 2, Fraction(1, 5)), (3, 1, Fraction(2, 3)), (4, 1, Fraction(1, 8))])
def test_spine_law_equals_size_biased_law(d, N, p):
    assert spine_law_exact(d, N, p).total == 1
    assert spine_lemma_tv(d, N, p) == 0


def test_exhaustive_parallel_equals_serial():
    inst = ExhaustiveInstance(2, 2)
    assert inst.table(workers=3) == inst.table()
    assert inst.table(force=inst.masks[5], workers=2) == inst.table(force=inst.masks[5])


def test_exhaustive_guard():
    with pytest.raises(ValueError, match="guard"):
        ExhaustiveInstance(2, 3)


def test_reweighting_identity_is_exact():
    assert reweighting_discrepancy(2, 2, Fraction(1, 2)) == 0
    assert reweighting_discrepancy(2, 2, Fraction(1, 4)) == 0


def test_distribution_helpers():
    a = Distribution({1: Fraction(1, 2), 3: Fraction(1, 2), 4: 0})
    b = Distribution({1: Fraction(1, 4), 2: Fraction(3, 4)})
    assert a.support == {1: Fraction(1, 2), 3: Fraction(1, 2)}
    assert a.tv_distance(a) == 0
    assert a.tv_distance(b) == Fraction(3, 4)
    assert a.mean() == 2 and a.prob(7) == 0
    assert Distribution.from_json(a.to_json()) == a
    assert json.loads(a.to_json()) == {"support": [[1, 1, 2], [3, 1, 2]]}


def test_tilde_partition_unit_square():
    spine = Path(2, (1, 2))
    assert tilde_partition(make_spined(closed_box(2), spine)) == 1
    assert tilde_partition(make_spined(closed_box(2, open_pairs=SQUARE), spine)) == 2
    # the plain partition function sees nothing in the closed box
    assert count_open_saw(closed_box(2), 2) == 0


def test_spined_environment_forces_only_spine_edges():
    spine = Path(2, (1, 1, 2))
    s = make_spined(closed_box(3), spine)
    assert all(s.is_open(e) and s.on_spine(e) for e in spine.edges())
    off = canonical_edge((0, 0), (0, 1))
    assert not s.is_open(off) and not s.on_spine(off)
    with pytest.raises(ValueError):
        make_spined(closed_box(3), Path(2, (1, 2, -1, -2)))
    with pytest.raises(ValueError):
        tilde_partition(s, 2)


@given(st.integers(2, 4), st.integers(1, 9), st.floats(0.05, 0.9), st.integers(0, 10**6))
def test_tilde_partition_dominates(d, N, p, seed):
    codes, _ = sample_uniform_saws(d, N, 1, rng_stream(seed))
    spine = Path(d, tuple(codes[0]))
    env = Environment(p, seed)
    zt = tilde_partition(make_spined(env, spine))
    assert zt >= max(1, count_open_saw(env, N, d=d))
    assert zt <= count_saw(d, N)


def test_sample_tilde_partitions_deterministic():
    a = sample_tilde_partitions(3, 8, 0.3, 10, 42)
    assert a == sample_tilde_partitions(3, 8, 0.3, 10, 42)
    assert all(z >= 1 for z in a)
    assert environment_seed(1, 2) != environment_seed(1, 2, 1)


def test_log_saw_count_estimate():
    val, exact = log_saw_count_estimate(2, 8, 10, 0)
    assert exact and val == pytest.approx(math.log(5916))
    val, exact = log_saw_count_estimate(2, 12, 4000, 1, max_nodes=10)
    assert not exact
    assert abs(val - math.log(count_saw(2, 12))) < 0.1


def test_certificate_examples():
    logS = math.log(count_saw(2, 6))
    r = strong_disorder_certificate([1] * 20, c=0.1, N=6, p=0.5, log_saw_count=logS)
    # threshold e^{0.6} * 780 / 64 is about 22.2
    assert r.hits == 20 and r.frequency == 1.0 and r.ci_high == pytest.approx(1.0)
    r = strong_disorder_certificate([22, 23, 1000, 5000], c=0.1, N=6, p=0.5, log_saw_count=logS)
    assert r.hits == 1 and r.ci_low < 0.25 < r.ci_high
    assert r.to_dict()["n"] == 4
    with pytest.raises(ValueError):
        strong_disorder_certificate([1], c=0.0, N=6, p=0.5, log_saw_count=logS)
    with pytest.raises(ValueError):
        strong_disorder_certificate([], c=0.1, N=6, p=0.5, log_saw_count=logS)
