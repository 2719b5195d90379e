import json
import warnings
from fractions import Fraction

import pytest
import sympy as sp

from sawperc import experiments as ex
from sawperc import refwalks
from sawperc.paths import count_saw


def test_threshold_values_at_d10():
    assert ex.threshold_bound(10) == pytest.approx(0.0530099, abs=5e-8)
    assert ex.pc_expansion(10) == pytest.approx(0.0529375, abs=5e-8)
    exact = ex.threshold_bound(10, sp.Rational(1, 10), exact=True)
    assert float(exact) == pytest.approx(ex.threshold_bound(10, 0.1), rel=1e-15)
    assert ex.pc_expansion(10, exact=True) == sp.Rational(847, 16000)


def test_threshold_validation():
    with pytest.raises(ValueError):
        ex.threshold_bound(1)
    with pytest.raises(ValueError):
        ex.threshold_bound(3, eps=-0.1)
    with pytest.raises(ValueError):
        ex.threshold_bound(3, eps=ex.EPS_MAX)


@pytest.mark.parametrize("d", [2, 3, 7, 64])
def test_threshold_gap_closed_form(d):
    eps = sp.Rational(1, 10)
    assert sp.simplify(ex.threshold_gap_exact(d, eps) - ex.threshold_gap_formula(d, eps)) == 0
    assert ex.threshold_gap_formula(d, eps) > 0
    # the gap closes once eps reaches 3 log 2 - 3/2
    assert ex.threshold_gap_formula(d, 3 * sp.log(2) - sp.Rational(3, 2)) == 0


def test_mu_expansions():
    assert ex.mu_expansion(4) == 6.875
    assert ex.mu4_expansion(4) == 6.875
    assert count_saw(3, 10) ** (1 / 10) > ex.mu_expansion(3)


def test_castor_shadow():
    terms = dict(ex.castor_shadow(2, 4))
    assert terms[1] == 1 and terms[4] == Fraction(100, 108)
    lo, hi = ex.castor_band(4)
    assert all(lo <= float(r) <= hi for n, r in ex.castor_rates(4, 10) if n >= 6)
    assert all(0 < r <= 1 for _, r in ex.castor_rates(3, 8))


def test_annealed_constant_extremes():
    assert ex.annealed_constant(3, 0.0).value == 0.0
    a = ex.annealed_constant(3, 1.0, N_star=1)
    assert a.value == 6.0 and a.N_star == 1
    assert ex.feasible_N(3) == ex.annealed_constant(3, 0.5).N_star


def test_binomial_bounds():
    assert ex.binomial_central_bounds_hold()
    assert not ex.binomial_central_bounds_hold(C=1)


def test_lowb_floor_check():
    assert ex.lowb_floor_check(3, 4, 3)
    assert ex.lowb_floor_check(0, 0, 0)
    assert all(ex.lowb_floor_check(a, b, c) for a in range(4) for b in range(20) for c in range(20))


def test_config_validation():
    for bad in (dict(d=1), dict(p=1.5), dict(trials=0), dict(N=0)):
        with pytest.raises(ValueError):
            ex.ExperimentConfig(**bad)


def test_parallel_map_is_ordered():
    items = list(range(20))
    assert ex.parallel_map(abs, items, workers=3) == items


def test_dumps_is_canonical():
    a = ex.dumps({"b": 1.0 / 3, "a": [1, 2.5]})
    assert a == ex.dumps({"a": [1, 2.5], "b": 1.0 / 3})
    assert json.loads(a)["b"] == float(f"{1 / 3:.12g}")


def test_quenched_p_one_ratio_is_one():
    rep = ex.run_quenched_estimate(ex.ExperimentConfig(d=2, N=6, p=1.0, trials=3))
    assert all(r == pytest.approx(1.0) for r in rep.final_ratios())
    assert rep.to_csv().splitlines()[0] == ",".join(ex.QUENCHED_FIELDS)
    assert json.loads(rep.to_json())["final_ratio_exact"]["mean"] == pytest.approx(1.0)


def test_quenched_restarts_and_warning():
    cfg = ex.ExperimentConfig(d=2, N=8, p=0.05, trials=1, max_restarts=3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(ex.NoPercolatingStart):
            ex.run_quenched_estimate(cfg)
    with pytest.warns(UserWarning):
        ex.run_quenched_estimate(ex.ExperimentConfig(d=2, N=3, p=0.3, trials=1, max_restarts=64))


def test_quenched_deterministic_across_workers():
    cfg = ex.ExperimentConfig(d=3, N=8, p=0.5, trials=6, seed=3)
    a = ex.run_quenched_estimate(cfg).to_csv()
    b = ex.run_quenched_estimate(ex.ExperimentConfig(d=3, N=8, p=0.5, trials=6, seed=3, workers=2)).to_csv()
    assert a == b


def test_good_spine_experiment():
    rep = ex.run_good_spine_experiment(ex.ExperimentConfig(d=5, N=60, trials=8, seed=1))
    s = rep.summary()
    assert 0 <= s["p_good"] <= 1
    assert len(rep.to_csv().splitlines()) == 9


def test_sample_good_spine():
    spine, tries = ex.sample_good_spine(5, 100, 0.5, 0, 0)
    assert tries >= 1 and spine.N == 100
    with pytest.raises(RuntimeError):
        ex.sample_good_spine(2, 40, 0.01, 0, 0, max_tries=3)


def test_bridge_experiment_small():
    rep = ex.run_bridge_experiment(ex.ExperimentConfig(d=5, N=120, p=0.1, trials=6, seed=4, validate_every=2))
    s = rep.summary()
    assert s["violations"] == [] and s["lowb_ok"]
    assert s["validated_paths"] >= 3
    assert rep.to_csv().splitlines()[0] == ",".join(ex.BRIDGE_FIELDS)


def test_mcdiarmid_check_shape():
    spine, _ = ex.sample_good_spine(5, 80, 0.5, 0, 0)
    out = ex.mcdiarmid_check(spine, 0.1, 0, 100)
    assert set(out) == {"A", "B", "C"}
    assert out["C"]["n_vars"] == len(ex.c_influence_edges(spine))
    assert all(row["ok"] for k in "ABC" for row in out[k]["tails"])


def test_annealed_identities():
    lhs, rhs = ex.annealed_identity_exact(2, 2, Fraction(1, 3))
    assert lhs == rhs == Fraction(12, 9)
    lhs, rhs = ex.annealed_identity_subbox(2, 3, Fraction(2, 5))
    assert lhs == rhs
    r = ex.annealed_mean_mc(2, 6, 0.5, 400, 7)
    assert abs(r["z_score"]) < 4


def test_pi2_checks():
    ok, msg = ex.pi2_law_check(2, 6)
    assert ok, msg
    assert ex.no4_exact_mean_u(2, 3) == Fraction(8, 36)


def test_verification_cases_pass():
    for fn in (ex.hash_vector_check, ex._check_saw_counts, ex._check_castor, ex._check_spine_lemma,
               ex._check_threshold_gap, ex._check_pi2, ex._check_rate, ex._check_monotone_coupling):
        ok, detail = fn()
        assert ok, detail


# -- negative controls: a corrupted ingredient must make its check fail ----------------

def test_corrupted_hash_is_caught(monkeypatch):
    from sawperc import environment
    monkeypatch.setattr(environment, "FNV_PRIME", environment.FNV_PRIME + 2)
    ok, detail = ex.hash_vector_check()
    assert not ok and "published" in detail


def test_flipped_rn_exponent_is_caught(monkeypatch):
    monkeypatch.setattr(refwalks, "RN_EXPONENT_SIGN", -1)
    ok, _ = ex._check_pi2()
    assert not ok
    r = ex.pi2_is_check(2, 8, 20000, 2024)
    assert abs(r["z_score"]) > 3


def test_wrong_castor_constant_is_caught():
    ok, _ = ex._check_castor(K=0.5)
    assert not ok


def test_crashing_case_is_a_failure():
    def boom():
        raise RuntimeError("nope")
    case = ex._case("x", boom)
    assert case.status == "fail" and "RuntimeError" in case.detail


def test_manifest_ok():
    assert ex.manifest_ok({"cases": [{"status": "pass"}]})
    assert not ex.manifest_ok({"cases": [{"status": "pass"}, {"status": "fail"}]})
