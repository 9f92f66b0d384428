import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rankregret.bounds import (
    KOTLOWSKI,
    SUITES,
    CertificationMissing,
    bartlett_sqrt_bound_check,
    check_main_bound,
    directed_lambda_search,
    kotlowski_check,
    low_noise_bound_diagnostic,
    main_bound_rhs,
    perturbation_family,
    random_scores,
    run_bound_suite,
    shrinkage_family,
    three_cluster_case,
    trial_rng,
)
from rankregret.distribution import FiniteDistribution, demo_distribution, random_distribution
from rankregret.losses import LOSS_NAMES, get_loss
from rankregret.reports import BoundReport
from rankregret.regret import ranking_regret

TWO = FiniteDistribution.from_arrays([0.5, 0.5], [0.8, 0.2])
SKEW = FiniteDistribution.from_arrays([0.7, 0.3], [0.9, 0.1])


class TestMainBoundRhs:
    def test_example(self):
        assert main_bound_rhs(4, 0.5, 0.02) == pytest.approx(0.4, abs=1e-15)

    def test_zero_regret(self):
        assert main_bound_rhs(4, 0.3, 0.0) == 0.0

    def test_squared_coefficient(self):
        assert main_bound_rhs(8, 0.5, 1.0) == pytest.approx(2.0, abs=1e-15)

    @pytest.mark.parametrize("lam, p", [(0, 0.5), (-1, 0.5), (4, 0), (4, 1)])
    def test_bad_inputs(self, lam, p):
        with pytest.raises(ValueError):
            main_bound_rhs(lam, p, 0.1)

    @given(st.floats(1e-3, 10), st.floats(1e-3, 10), st.floats(0.05, 0.5), st.floats(0.05, 0.5),
           st.floats(0, 5), st.floats(0, 5))
    def test_monotonicity(self, l1, l2, p1, p2, r1, r2):
        (l1, l2), (p1, p2), (r1, r2) = sorted((l1, l2)), sorted((p1, p2)), sorted((r1, r2))
        # p <= 1/2 so p(1-p) increases with p
        assert main_bound_rhs(l1, 0.3, 1.0) >= main_bound_rhs(l2, 0.3, 1.0)
        assert main_bound_rhs(4, p1, 1.0) >= main_bound_rhs(4, p2, 1.0)
        assert main_bound_rhs(4, 0.3, r1) <= main_bound_rhs(4, 0.3, r2)


class TestCheckMainBound:
    @pytest.mark.parametrize("name", LOSS_NAMES)
    def test_truth_is_tight_zero(self, name):
        ell = get_loss(name)
        rep = check_main_bound(TWO, ell, ell.link(TWO.eta))
        assert rep.lhs == 0 and abs(rep.rhs) <= 1e-6 and rep.holds

    def test_squared_reversed(self):
        rep = check_main_bound(TWO, get_loss("sq"), [-0.4, 0.4])
        assert rep.lhs == pytest.approx(0.6, abs=1e-15)
        assert rep.context["regret_surrogate"] == pytest.approx(1.0, abs=1e-12)
        assert rep.rhs == pytest.approx(2.0, abs=1e-12)
        assert rep.slack == pytest.approx(1.4, abs=1e-12)

    def test_missing_lambda(self):
        ell = get_loss("sq")
        ell = dataclasses.replace(ell, proper=dataclasses.replace(ell.proper, strong_properness=None))
        with pytest.raises(CertificationMissing):
            check_main_bound(TWO, ell, [0.0, 0.0])

    def test_context(self):
        rep = check_main_bound(TWO, get_loss("exp"), [0.0, 0.0], context={"trial": 7})
        assert rep.context["trial"] == 7 and rep.context["lambda"] == 4
        assert rep.to_dict()["holds"] is True

    @pytest.mark.parametrize("name", LOSS_NAMES)
    def test_random_trials(self, name):
        ell = get_loss(name)
        for t in range(100):
            D, f = random_distribution(trial_rng(5, t)), None
            f = random_scores(ell, len(D), trial_rng(6, t), tie_prob=0.3)
            assert check_main_bound(D, ell, f).holds


class TestBoundReport:
    def test_holds_iff_slack(self):
        assert BoundReport("x", 1.0, 1.0 - 5e-10).holds
        assert not BoundReport("x", 1.0, 1.0 - 2e-9).holds

    def test_infinite_rhs(self):
        assert BoundReport("x", 0.3, math.inf).slack == math.inf


class TestDirectedSearch:
    @pytest.mark.parametrize("name", LOSS_NAMES)
    def test_certified_lambda_holds(self, name):
        ell = get_loss(name)
        assert all(r.holds for r in directed_lambda_search(ell, ell.strong_properness))

    def test_exponential_sixteen_violates(self):
        reps = directed_lambda_search(get_loss("exp"), 16.0)
        bad = [r for r in reps if not r.holds]
        assert bad
        assert min(r.slack for r in bad) < -1e-9

    def test_three_cluster_reverses_order(self):
        D, f = three_cluster_case(get_loss("sq"), 0.5, 0.01)
        assert f[0] > f[1] > f[2]
        assert ranking_regret(D, f) > 0


class TestBartlett:
    @pytest.mark.parametrize("name", ["exp", "log"])
    def test_monotone_of_eta(self, name):
        phi = get_loss(name)
        rep = bartlett_sqrt_bound_check(TWO, phi, phi.link(TWO.eta))
        assert rep.lhs == 0 and rep.holds

    def test_rejects_other_losses(self):
        with pytest.raises(ValueError):
            bartlett_sqrt_bound_check(TWO, get_loss("sq"), [0.0, 0.0])

    @pytest.mark.parametrize("name", ["exp", "log"])
    def test_random(self, name):
        phi = get_loss(name)
        for t in range(200):
            D = random_distribution(trial_rng(7, t))
            f = trial_rng(8, t).standard_normal(len(D))
            assert bartlett_sqrt_bound_check(D, phi, f).holds


class TestKotlowski:
    def test_constants(self):
        assert KOTLOWSKI["exp"] == (9 / 4, 3 / math.sqrt(2))
        assert KOTLOWSKI["log"] == (2.0, 2.0)

    @pytest.mark.parametrize("tag", ["exp", "log"])
    def test_balanced_truth_is_zero(self, tag):
        D = FiniteDistribution.from_arrays([0.25, 0.25, 0.5], [0.9, 0.1, 0.5])
        phi = get_loss(tag)
        pair, rank = kotlowski_check(D, tag, phi.link(D.eta))
        for r in (pair, rank):
            assert abs(r.lhs) <= 1e-12 and abs(r.rhs) <= 1e-6

    # values from exact sums in mpmath over the two-point pair distribution
    @pytest.mark.parametrize("tag, pair_lhs, bal", [
        ("exp", 0.5989304812834225, 0.3666995036188764),
        ("log", 0.4813667171270055, 0.3335442905554734),
    ])
    def test_skewed_two_point(self, tag, pair_lhs, bal):
        pair, rank = kotlowski_check(SKEW, tag, [0.0, 0.0])
        k, m = KOTLOWSKI[tag]
        assert pair.lhs == pytest.approx(pair_lhs, abs=1e-12)
        assert pair.rhs == pytest.approx(k * bal, abs=1e-12)
        assert rank.rhs == pytest.approx(m * math.sqrt(bal), abs=1e-12)
        assert pair.slack > 0 and rank.slack > 0

    def test_exponential_pairwise_counterexample(self):
        # pairwise exp risk is the product of the two class factors, the
        # balanced risk their mean, so the ratio is unbounded
        D = FiniteDistribution.from_arrays([0.5, 0.5], [0.8, 0.2])
        pair, rank = kotlowski_check(D, "exp", [-1.0, 1.0])
        assert pair.lhs == pytest.approx(4.414, abs=1e-3)
        assert pair.rhs == pytest.approx(3.258, abs=1e-3)
        assert not pair.holds
        assert rank.holds

    @pytest.mark.parametrize("tag", ["exp", "log"])
    def test_end_to_end_random(self, tag):
        phi = get_loss(tag)
        for t in range(200):
            D = random_distribution(trial_rng(9, t))
            f = trial_rng(10, t).standard_normal(len(D))
            assert kotlowski_check(D, tag, f)[1].holds

    def test_logistic_pairwise_random(self):
        for t in range(200):
            D = random_distribution(trial_rng(11, t))
            f = trial_rng(12, t).standard_normal(len(D))
            assert kotlowski_check(D, "log", f)[0].holds

    def test_bad_tag(self):
        with pytest.raises(ValueError):
            kotlowski_check(TWO, "sq", [0.0, 0.0])


class TestLowNoise:
    def test_alpha_zero(self):
        D = demo_distribution()
        ell = get_loss("sq")
        fam = perturbation_family(D, ell, [0.1, 0.3, 0.5, 0.9])
        diag = low_noise_bound_diagnostic(D, ell, fam, 0.0, [0.05, 0.5, 1.0])
        assert diag.target_exponent == 0.5
        assert diag.certificate == pytest.approx(1.0)
        assert diag.all_main_bounds_hold
        assert diag.fitted_slope is not None

    def test_shrinkage_has_zero_rank_regret(self):
        D = demo_distribution()
        ell = get_loss("sq")
        fam = shrinkage_family(D, ell, np.arange(1, 10) / 10)
        diag = low_noise_bound_diagnostic(D, ell, fam, 0.5, [0.05, 1.0])
        regs = [r["regret_surrogate"] for r in diag.table]
        assert np.all(np.diff(regs) > 0)
        assert all(r["regret_rank"] == 0 for r in diag.table)
        assert diag.fitted_slope is None and len(diag.excluded) == 9

    def test_serialisation(self):
        D = demo_distribution()
        ell = get_loss("log")
        diag = low_noise_bound_diagnostic(D, ell, perturbation_family(D, ell, [0.2, 0.6]), 0.5,
                                          np.geomspace(0.05, 1, 5))
        d = diag.to_dict()
        assert d["target_exponent"] == pytest.approx(0.6)
        assert d["certificate_scope"]["t_min"] == pytest.approx(0.05)
        assert len(d["points"]) == 2

    def test_empty_family(self):
        with pytest.raises(ValueError):
            low_noise_bound_diagnostic(TWO, get_loss("sq"), [], 0.0, [0.5])

    def test_perturbation_scale_range(self):
        with pytest.raises(ValueError):
            perturbation_family(TWO, get_loss("sq"), [1.5])

    def test_perturbation_finite_for_unbounded_link(self):
        fam = perturbation_family(demo_distribution(), get_loss("exp"), [0.0, 0.5, 1.0])
        assert all(np.all(np.isfinite(f)) for f in fam)


class TestSuite:
    def test_small_run_no_violations_except_exp_pairwise(self):
        rows = run_bound_suite(20, 0, LOSS_NAMES)
        bad = {(r["bound_name"], r["loss"]) for r in rows if not r["holds"]}
        assert bad <= {("kotlowski_pairwise", "exp")}
        names = {r["bound_name"] for r in rows}
        assert {"main", "plugin", "pairwise_identity", "bartlett", "kotlowski_rank"} <= names

    def test_suite_selection(self):
        rows = run_bound_suite(3, 1, ["sq"], suites=["plugin"])
        assert {r["bound_name"] for r in rows} == {"plugin"}

    def test_unknown_suite(self):
        with pytest.raises(ValueError):
            run_bound_suite(1, 0, ["sq"], suites=["nope"])

    def test_lambda_override_negative_control(self):
        rows = run_bound_suite(5, 0, ["exp"], lambda_override={"exp": 16.0},
                               suites=["main", "directed"])
        assert any(not r["holds"] for r in rows)

    def test_deterministic(self):
        a = run_bound_suite(5, 3, ["log"], suites=SUITES)
        b = run_bound_suite(5, 3, ["log"], suites=SUITES)
        assert a == b

    def test_trial_rng_independent_streams(self):
        assert trial_rng(0, 1).random() != trial_rng(0, 2).random()
        assert trial_rng(4, 2, 3).random() == trial_rng(4, 2, 3).random()
