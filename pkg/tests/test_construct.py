import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rankregret.construct import (
    ConcaveRiskSpec,
    NotConcaveError,
    NotMonotoneError,
    canonical_composite,
    canonical_link,
    certify_all,
    certify_proper,
    certify_regular,
    certify_strictly_proper,
    certify_strongly_proper,
    from_concave_risk,
    grid,
    is_strictly_concave,
    strong_concavity_modulus,
)
from rankregret.losses import (
    C_EXP,
    C_LOG,
    C_SPHER,
    C_SQ,
    C_SQ_SCALED,
    LOSS_NAMES,
    ProperLoss,
    catalog,
    hinge_cpe_loss,
    linear_loss,
    zero_one_loss,
)

G = grid()
INNER = G[1:-1]


def sph(e):
    return 1 - np.sqrt(e ** 2 + (1 - e) ** 2)


def sph_prime(e):
    return -(2 * e - 1) / np.sqrt(e ** 2 + (1 - e) ** 2)


SPECS = {
    "spher": ConcaveRiskSpec(sph, sph_prime, 1.0, "spher"),
    "sq'": ConcaveRiskSpec(lambda e: e * (1 - e), lambda e: 1 - 2 * e, 2.0, "sq'"),
    "exp": ConcaveRiskSpec(lambda e: 2 * np.sqrt(e * (1 - e)),
                           lambda e: (1 - 2 * e) / np.sqrt(e * (1 - e)), 4.0, "exp"),
}


def random_concave_spec(rng):
    """H = a e(1-e) + b sqrt(e(1-e)) + c (1 - sqrt(e^2 + (1-e)^2)), nonnegative weights."""
    a, b, c = rng.uniform(0.1, 2.0, 3)

    def H(e):
        return a * e * (1 - e) + b * np.sqrt(e * (1 - e)) + c * sph(e)

    def Hp(e):
        return a * (1 - 2 * e) + b * (1 - 2 * e) / (2 * np.sqrt(e * (1 - e))) + c * sph_prime(e)

    return ConcaveRiskSpec(H, Hp, None, "mix")


class TestFromConcaveRisk:
    def test_spherical_partials(self):
        c = from_concave_risk(SPECS["spher"])
        pos, neg = c.partials(G)
        n = np.sqrt(G ** 2 + (1 - G) ** 2)
        np.testing.assert_allclose(pos, 1 - G / n, atol=1e-12)
        np.testing.assert_allclose(neg, 1 - (1 - G) / n, atol=1e-12)

    def test_scaled_squared_partials(self):
        pos, neg = from_concave_risk(SPECS["sq'"]).partials(G)
        np.testing.assert_allclose(pos, (1 - G) ** 2, atol=1e-12)
        np.testing.assert_allclose(neg, G ** 2, atol=1e-12)

    def test_exponential_partials(self):
        pos, _ = from_concave_risk(SPECS["exp"]).partials(INNER)
        np.testing.assert_allclose(pos, np.sqrt((1 - INNER) / INNER), rtol=1e-12)

    def test_rejects_convex(self):
        with pytest.raises(NotConcaveError) as info:
            from_concave_risk(ConcaveRiskSpec(lambda e: e ** 2, lambda e: 2 * e))
        assert info.value.second_difference > 0

    @pytest.mark.parametrize("name", sorted(SPECS))
    def test_savage_identity(self, name):
        spec = SPECS[name]
        c = from_concave_risk(spec)
        e, q = G[:, None], INNER[None, :]
        pos, neg = c.partials(q)
        L = e * pos + (1 - e) * neg
        np.testing.assert_allclose(L, spec.H(q) + (e - q) * spec.H_prime(q), atol=1e-12)

    @pytest.mark.parametrize("seed", range(20))
    def test_round_trip_bayes_risk(self, seed):
        spec = random_concave_spec(np.random.default_rng(seed))
        c = from_concave_risk(spec)
        pos, neg = c.partials(INNER)
        np.testing.assert_allclose(INNER * pos + (1 - INNER) * neg, spec.H(INNER), atol=1e-12)


class TestCanonicalLink:
    def test_exponential(self):
        psi = canonical_link(C_EXP)
        q = INNER
        np.testing.assert_allclose(psi(q), (2 * q - 1) / np.sqrt(q * (1 - q)), rtol=1e-10, atol=1e-10)

    def test_scaled_squared(self):
        np.testing.assert_allclose(canonical_link(C_SQ_SCALED)(G), 2 * G - 1, atol=1e-15)

    def test_spherical(self):
        expected = (2 * G - 1) / np.sqrt(G ** 2 + (1 - G) ** 2)
        np.testing.assert_allclose(canonical_link(C_SPHER)(G), expected, atol=1e-12)

    def test_logistic_is_logit(self):
        q = INNER
        np.testing.assert_allclose(canonical_link(C_LOG)(q), np.log(q / (1 - q)), atol=1e-10)

    def test_range_is_image(self):
        psi = canonical_link(C_SQ_SCALED)
        assert (psi.lo, psi.hi) == (-1.0, 1.0)
        psi = canonical_link(C_EXP)
        assert (psi.lo, psi.hi) == (-np.inf, np.inf)

    def test_inverse_round_trip(self):
        psi = canonical_link(C_SPHER)
        np.testing.assert_allclose(psi.inv(psi(G)), G, atol=1e-12)

    def test_not_strictly_proper(self):
        with pytest.raises(NotMonotoneError):
            canonical_link(zero_one_loss())

    @pytest.mark.parametrize("c", [C_EXP, C_LOG, C_SPHER, C_SQ], ids=["exp", "log", "spher", "sq"])
    def test_canonical_loss_convex_in_prediction(self, c):
        ell = canonical_composite(c)
        lo, hi = ell.link(G[1]), ell.link(G[-2])
        f = np.linspace(lo, hi, 513)
        for y in (-1, 1):
            v = ell(y, f)
            assert np.all(v[:-2] - 2 * v[1:-1] + v[2:] >= -1e-9)


class TestCertifyProper:
    def test_log_passes(self):
        assert certify_proper(C_LOG).verdict

    def test_zero_one_proper_not_strict(self):
        c = zero_one_loss()
        assert certify_proper(c).verdict
        assert not certify_strictly_proper(c).verdict

    def test_linear_fails_with_witness(self):
        rep = certify_proper(linear_loss())
        assert not rep.verdict
        assert rep.witness.margin < -1e-9
        d = rep.to_dict()
        assert d["verdict"] == "fail" and set(d["witness"]) == {"eta", "eta_hat", "margin"}

    def test_linear_counterexample_values(self):
        # L(0.9, 1) = 0.1 < L(0.9, 0.9) = 0.18
        c = linear_loss()
        pos, neg = c.partials(np.array([1.0, 0.9]))
        L = 0.9 * pos + 0.1 * neg
        np.testing.assert_allclose(L, [0.1, 0.18], atol=1e-15)

    def test_hinge_is_not_proper(self):
        assert not certify_proper(hinge_cpe_loss()).verdict


class TestCertifyStronglyProper:
    def test_exp_at_four(self):
        rep = certify_strongly_proper(C_EXP, 4.0)
        assert rep.verdict and rep.lam == 4.0

    def test_squared_slack_zero(self):
        rep = certify_strongly_proper(C_SQ, 8.0)
        assert rep.verdict
        assert abs(rep.min_margin) <= 1e-12

    def test_zero_one_fails(self):
        rep = certify_strongly_proper(zero_one_loss(), 0.1)
        assert not rep.verdict
        # at (0.4, 0.2) the regret is 0 but the quadratic asks for 0.002
        from rankregret.construct import strong_properness_margin
        assert strong_properness_margin(zero_one_loss(), 0.1, 0.4, 0.2) == pytest.approx(-0.002)

    def test_exp_at_sixteen_fails(self):
        rep = certify_strongly_proper(C_EXP, 16.0)
        assert not rep.verdict
        assert rep.witness.margin < -1e-9

    def test_rejects_nonpositive_lambda(self):
        with pytest.raises(ValueError):
            certify_strongly_proper(C_EXP, 0.0)

    def test_serialisation(self):
        d = certify_strongly_proper(C_EXP, 16.0).to_dict()
        assert d["property"] == "strongly_proper" and d["lambda"] == 16.0
        assert d["grid_step"] == 1 / 256


class TestCertifyRegular:
    def test_exp_notes_infinite_endpoint(self):
        rep = certify_regular(C_EXP)
        assert rep.verdict
        assert any("c(1,0) = inf" in n for n in rep.notes)

    def test_sq_finite(self):
        rep = certify_regular(C_SQ)
        assert rep.verdict and not rep.notes
        pos, neg = C_SQ.partials(G)
        assert pos.max() <= 4 and neg.max() <= 4

    def test_infinite_neg_at_zero_fails(self):
        c = ProperLoss("bad", lambda q: 1 - q, lambda q: np.where(q == 0, np.inf, q),
                       lambda e: e)
        assert not certify_regular(c).verdict


class TestModulus:
    @pytest.mark.parametrize("c, lam, tol", [
        (C_EXP, 4, 0.02), (C_LOG, 4, 0.02), (C_SPHER, 1, 0.02), (C_SQ_SCALED, 2, 0.02), (C_SQ, 8, 1e-6),
    ], ids=["exp", "log", "spher", "sq'", "sq"])
    def test_values(self, c, lam, tol):
        assert strong_concavity_modulus(c.bayes_risk) == pytest.approx(lam, abs=tol)

    def test_linear_piece_is_zero(self):
        assert strong_concavity_modulus(lambda e: np.minimum(e, 1 - e)) == 0.0

    def test_chord_definition_on_grid_triples(self):
        # brute force over triples of a coarse grid agrees with the second-difference form
        step = 1 / 16
        g = grid(step)
        H = C_EXP.bayes_risk
        lam = strong_concavity_modulus(H, step)
        worst = np.inf
        for i in range(len(g)):
            for j in range(i + 2, len(g)):
                for k in range(i + 1, j):
                    t = (g[j] - g[k]) / (g[j] - g[i])
                    gap = H(g[k]) - t * H(g[i]) - (1 - t) * H(g[j])
                    worst = min(worst, gap / (0.5 * t * (1 - t) * (g[i] - g[j]) ** 2))
        assert lam == pytest.approx(worst, rel=1e-9)


@pytest.mark.parametrize("ell", catalog(), ids=LOSS_NAMES)
class TestCatalogCertification:
    def test_all_four_pass(self, ell):
        assert all(r.verdict for r in certify_all(ell.proper))

    def test_strict_properness_matches_strict_concavity(self, ell):
        assert certify_strictly_proper(ell.proper).verdict == is_strictly_concave(ell.proper.bayes_risk)

    def test_strong_properness_iff_modulus(self, ell):
        mod = strong_concavity_modulus(ell.proper.bayes_risk)
        for lam in (0.5 * ell.strong_properness, ell.strong_properness, 1.5 * ell.strong_properness):
            assert certify_strongly_proper(ell.proper, lam).verdict == (mod >= lam - 1e-6)


@pytest.mark.parametrize("seed", range(20))
def test_strong_properness_iff_modulus_random(seed):
    spec = random_concave_spec(np.random.default_rng(100 + seed))
    c = from_concave_risk(spec)
    mod = strong_concavity_modulus(spec.H)
    for lam in (0.9 * mod, 1.1 * mod):
        assert certify_strongly_proper(c, lam).verdict == (mod >= lam - 1e-6)


def test_canonical_squared_adjudication():
    # stored constant 2 passes; the alternative reading 4 does not
    assert certify_strongly_proper(C_SQ_SCALED, 2.0).verdict
    assert not certify_strongly_proper(C_SQ_SCALED, 4.0).verdict


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 10.0))
def test_scaling_scales_modulus(k):
    base = strong_concavity_modulus(C_LOG.bayes_risk)
    assert strong_concavity_modulus(lambda e: k * C_LOG.bayes_risk(e)) == pytest.approx(k * base, rel=1e-9)
