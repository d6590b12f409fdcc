import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from infobounds.rate_functions import (
    BERNOULLI_MODEL,
    EXPONENTIAL_MODEL,
    GAUSSIAN_MODEL,
    POISSON_MODEL,
    POSITIVE,
    Bernoulli,
    BoundedKL,
    DomainError,
    ExplicitPhi,
    Exponential,
    GammaFixedShape,
    Poisson,
    Quadratic,
    bregman_kl,
    family_from_name,
    gamma_model,
    kl,
    lambda_of_x,
    rate,
)

# frozen with mpmath at 50 digits
KL_QUARTER_HALF = 0.13081203594113696
POISSON_2_1 = 0.38629436111989062


def _mp_kl(p, q):
    p, q = mp.mpf(p), mp.mpf(q)
    return p * mp.log(p / q) + (1 - p) * mp.log((1 - p) / (1 - q))


class TestKL:
    def test_equal_arguments(self):
        assert kl(0.5, 0.5) == 0.0

    def test_reference_value(self):
        assert kl(0.25, 0.5) == pytest.approx(KL_QUARTER_HALF, abs=1e-4)
        assert kl(0.25, 0.5) == pytest.approx(KL_QUARTER_HALF, rel=1e-13)

    @pytest.mark.parametrize("p,q", [(0.3, 1.0), (0.7, 0.0), (1.0, 0.0), (0.0, 1.0)])
    def test_infinite_conventions(self, p, q):
        assert kl(p, q) == math.inf

    @pytest.mark.parametrize("p,q,expected", [(0.0, 0.5, math.log(2)), (1.0, 0.5, math.log(2)), (0.0, 0.0, 0.0), (1.0, 1.0, 0.0)])
    def test_boundary_conventions(self, p, q, expected):
        assert kl(p, q) == pytest.approx(expected, rel=1e-15)

    @pytest.mark.parametrize("p,q", [(-0.1, 0.5), (0.5, 1.2), (float("nan"), 0.5)])
    def test_domain(self, p, q):
        with pytest.raises(DomainError):
            kl(p, q)

    def test_against_mpmath(self):
        rng = np.random.default_rng(7)
        for p, q in rng.uniform(1e-4, 1 - 1e-4, size=(200, 2)):
            assert kl(p, q) == pytest.approx(float(_mp_kl(p, q)), rel=1e-10, abs=1e-15)

    def test_vectorised(self):
        p = np.array([0.1, 0.5, 0.9])
        np.testing.assert_allclose(kl(p, 0.5), [kl(x, 0.5) for x in p])

    def test_pinsker_grid(self):
        g = np.linspace(0.0, 1.0, 101)
        P, Q = np.meshgrid(g, g)
        assert np.all(kl(P, Q) >= 2 * (P - Q) ** 2)


class TestRate:
    @pytest.mark.parametrize("mu", [0.1, 1.0, 7.5])
    def test_exponential_zero_at_mean(self, mu):
        assert rate(Exponential(), mu, mu) == 0.0

    def test_quadratic_value(self):
        assert rate(Quadratic(1.0), 0.75, 0.5) == pytest.approx(0.125, rel=1e-15)

    def test_poisson_value_by_direct_maximisation(self):
        res = minimize_scalar(lambda l: -(2.0 * l - (math.exp(l) - 1.0)), bounds=(-5, 5), method="bounded",
                              options={"xatol": 1e-12})
        assert -res.fun == pytest.approx(POISSON_2_1, abs=1e-8)
        assert rate(Poisson(), 2.0, 1.0) == pytest.approx(POISSON_2_1, abs=1e-4)
        assert rate(Poisson(), 2.0, 1.0) == pytest.approx(POISSON_2_1, rel=1e-13)

    def test_bernoulli_is_kl(self):
        assert rate(Bernoulli(), 0.25, 0.5) == kl(0.25, 0.5)
        assert rate(BoundedKL(), 0.25, 0.5) == kl(0.25, 0.5)

    def test_outside_support_is_infinite(self):
        assert rate(Bernoulli(), 1.5, 0.5) == math.inf
        assert rate(Exponential(), -1.0, 1.0) == math.inf
        assert rate(Poisson(), -0.5, 1.0) == math.inf

    def test_poisson_zero_count(self):
        assert rate(Poisson(), 0.0, 2.0) == pytest.approx(2.0)

    def test_gamma_scales_exponential(self):
        x = np.linspace(0.2, 5, 30)
        np.testing.assert_allclose(rate(GammaFixedShape(3.0), x, 1.3), 3.0 * rate(Exponential(), x, 1.3), rtol=1e-14)

    @pytest.mark.parametrize("family,mu", [(Bernoulli(), 1.5), (Exponential(), 0.0), (Poisson(), -1.0)])
    def test_mu_domain(self, family, mu):
        with pytest.raises(DomainError):
            rate(family, 0.5, mu)

    def test_family_equality(self):
        assert Quadratic(2.0) == Quadratic(2.0)
        assert Quadratic(2.0) != Quadratic(1.0)
        assert family_from_name("gamma", shape=2) == GammaFixedShape(2.0)
        with pytest.raises(DomainError):
            family_from_name("cauchy")


FAMILIES = [
    (Bernoulli(), 0.3, np.linspace(0.01, 0.99, 99)),
    (Quadratic(1.5), 0.2, np.linspace(-3, 3, 101)),
    (Exponential(), 1.7, np.linspace(0.05, 8, 101)),
    (Poisson(), 2.5, np.linspace(0.05, 9, 101)),
    (GammaFixedShape(2.5), 0.8, np.linspace(0.05, 5, 101)),
]


@pytest.mark.parametrize("family,mu,grid", FAMILIES, ids=lambda v: getattr(v, "name", ""))
class TestShape:
    def test_monotone_away_from_mean(self, family, mu, grid):
        r = rate(family, grid, mu)
        right, left = r[grid >= mu], r[grid <= mu]
        assert np.all(np.diff(right) >= -1e-15)
        assert np.all(np.diff(left) <= 1e-15)

    def test_midpoint_convexity(self, family, mu, grid):
        a, b = grid[:-2], grid[2:]
        mid = rate(family, 0.5 * (a + b), mu)
        assert np.all(mid <= 0.5 * (rate(family, a, mu) + rate(family, b, mu)) + 1e-12)

    def test_duality(self, family, mu, grid):
        lam = lambda_of_x(family, grid, mu)
        np.testing.assert_allclose(family.dphi(lam, mu), grid, rtol=1e-9, atol=1e-12)
        dual = lam * grid - family.phi(lam, mu)
        assert np.max(np.abs(dual - rate(family, grid, mu))) <= 1e-9

    def test_lambda_zero_at_mean(self, family, mu, grid):
        assert lambda_of_x(family, mu, mu) == pytest.approx(0.0, abs=1e-12)


class TestLambda:
    def test_bernoulli_closed_form(self):
        assert lambda_of_x(Bernoulli(), 0.75, 0.5) == pytest.approx(math.log(3), rel=1e-14)

    @given(x=st.floats(-10, 10), mu=st.floats(-10, 10), K=st.floats(0.1, 5))
    def test_quadratic_closed_form(self, x, mu, K):
        assert lambda_of_x(Quadratic(K), x, mu) == pytest.approx(4 * (x - mu) / K**2, rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("family,x", [(Bernoulli(), 1.0), (Bernoulli(), 0.0), (Exponential(), 0.0), (Poisson(), 0.0)])
    def test_outside_open_interval(self, family, x):
        with pytest.raises(DomainError):
            lambda_of_x(family, x, 0.5)


class TestExplicitPhi:
    def poisson_like(self):
        return ExplicitPhi(
            phi=lambda l, m: m * math.expm1(l),
            dphi=lambda l, m: m * math.exp(l),
            d2phi=lambda l, m: m * math.exp(l),
            mu_domain=POSITIVE,
        )

    def test_matches_poisson(self):
        fam = self.poisson_like()
        x = np.linspace(0.1, 6, 40)
        np.testing.assert_allclose(fam.rate(x, 1.5), Poisson().rate(x, 1.5), rtol=1e-9, atol=1e-12)

    def test_bisection_only(self):
        fam = ExplicitPhi(phi=lambda l, m: l * m + l * l / 8, dphi=lambda l, m: m + l / 4)
        np.testing.assert_allclose(fam.rate(np.array([0.0, 0.25, 0.9]), 0.25), Quadratic(1.0).rate(np.array([0.0, 0.25, 0.9]), 0.25),
                                   rtol=1e-9, atol=1e-12)

    def test_bounded_lmgf_interval(self):
        # exponential law with mean 1: phi = -log(1 - lam) on lam < 1
        fam = ExplicitPhi(phi=lambda l, m: -m * math.log1p(-l) if m == 1 else math.nan,
                          dphi=lambda l, m: 1 / (1 - l), lam_hi=1.0, mu_domain=POSITIVE)
        x = np.array([0.3, 1.0, 4.0])
        np.testing.assert_allclose(fam.rate(x, 1.0), Exponential().rate(x, 1.0), rtol=1e-8, atol=1e-12)

    def test_requires_zero_inside(self):
        with pytest.raises(DomainError):
            ExplicitPhi(phi=lambda l, m: l, dphi=lambda l, m: 1.0, lam_lo=0.0)


class TestBregman:
    def test_zero_on_diagonal(self):
        assert bregman_kl(POISSON_MODEL, 0.4, 0.4) == 0.0

    def test_bernoulli_reference(self):
        val = bregman_kl(BERNOULLI_MODEL, math.log(1 / 3), 0.0)
        assert val == pytest.approx(KL_QUARTER_HALF, abs=1e-4)
        assert val == pytest.approx(kl(0.25, 0.5), rel=1e-12)

    def test_gaussian_reference(self):
        assert bregman_kl(GAUSSIAN_MODEL, 0.0, 1.0) == pytest.approx(0.5, rel=1e-15)

    @settings(max_examples=200)
    @given(beta=st.floats(-4, 4), theta=st.floats(-4, 4))
    def test_matches_rate_on_canonical_models(self, beta, theta):
        for model in (BERNOULLI_MODEL, POISSON_MODEL, GAUSSIAN_MODEL):
            expected = rate(model.family, model.db(beta), model.db(theta))
            assert bregman_kl(model, beta, theta) == pytest.approx(float(expected), rel=1e-8, abs=1e-10)

    @pytest.mark.parametrize("model", [EXPONENTIAL_MODEL, gamma_model(2.0)], ids=["exponential", "gamma"])
    def test_negative_parameter_models(self, model):
        beta, theta = -0.7, -2.1
        assert bregman_kl(model, beta, theta) == pytest.approx(float(rate(model.family, model.db(beta), model.db(theta))), rel=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            bregman_kl(EXPONENTIAL_MODEL, 0.5, -1.0)
