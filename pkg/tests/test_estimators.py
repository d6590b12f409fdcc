from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from infobounds.estimators import DiscountedState, StreamState, multinomial_counts


class TestStreamState:
    def test_scalar_updates(self):
        s = StreamState()
        for obs, x in [(True, 1.0), (False, 5.0), (True, 0.0), (True, 1.0)]:
            s.update(obs, x)
        assert (s.t, s.S, s.N) == (4, 2.0, 3)
        assert s.mean == pytest.approx(2 / 3)

    def test_mean_before_observation(self):
        assert np.isnan(StreamState().mean)

    def test_vectorised_matches_scalar(self):
        rng = np.random.default_rng(3)
        obs = rng.random((50, 4)) < 0.6
        xs = rng.random((50, 4))
        vec = StreamState.zeros(4)
        scal = [StreamState() for _ in range(4)]
        for o, x in zip(obs, xs):
            vec.update(o, x)
            for j in range(4):
                scal[j].update(bool(o[j]), float(x[j]))
        np.testing.assert_allclose(vec.S, [s.S for s in scal])
        np.testing.assert_array_equal(vec.N, [s.N for s in scal])
        np.testing.assert_allclose(vec.mean, [s.mean for s in scal])


class TestDiscountedState:
    def test_matches_explicit_sums(self):
        rng = np.random.default_rng(5)
        g, n = 0.9, 40
        eps = rng.random(n) < 0.7
        xs = rng.random(n)
        mus = np.linspace(0.2, 0.8, n)
        st_ = DiscountedState(g)
        for e, x, m in zip(eps, xs, mus):
            st_.update(bool(e), float(x), float(m))
        w = g ** (n - 1 - np.arange(n))
        assert st_.S_g == pytest.approx(np.sum(w * eps * xs), rel=1e-12)
        assert st_.N_g == pytest.approx(np.sum(w * eps), rel=1e-12)
        assert st_.N_g2 == pytest.approx(np.sum(w**2 * eps), rel=1e-12)
        assert st_.M_g == pytest.approx(np.sum(w * eps * mus), rel=1e-12)
        assert st_.nu_g == pytest.approx((1 - g**n) / (1 - g), rel=1e-12)
        assert st_.mean == pytest.approx(st_.S_g / st_.N_g)

    def test_unobserved_steps_still_discount(self):
        st_ = DiscountedState(0.5).update(True, 1.0).update(False, 0.0)
        assert st_.S_g == 0.5 and st_.N_g == 0.5 and st_.N_g2 == 0.25

    def test_gamma_to_one_recovers_plain_sums(self):
        rng = np.random.default_rng(0)
        xs = rng.random(200)
        st_ = DiscountedState(1 - 1e-12)
        for x in xs:
            st_.update(True, float(x), 0.5)
        assert st_.fluctuation == pytest.approx((xs.sum() - 100) / np.sqrt(200), rel=1e-6)

    def test_constant_stream_has_no_fluctuation(self):
        st_ = DiscountedState.zeros(0.95, 3)
        for _ in range(30):
            st_.update(np.array([True, False, True]), 0.4, 0.4)
        np.testing.assert_allclose(st_.fluctuation, 0.0, atol=1e-15)

    @pytest.mark.parametrize("gamma", [0.0, 1.0, 1.5])
    def test_gamma_range(self, gamma):
        with pytest.raises(ValueError):
            DiscountedState(gamma)


class TestMultinomialCounts:
    def test_exact_frequencies(self):
        emp = multinomial_counts("abacab")
        assert emp.alphabet == ("a", "b", "c")
        assert emp.counts == (3, 2, 1)
        assert emp.exact() == (Fraction(1, 2), Fraction(1, 3), Fraction(1, 6))
        assert sum(emp.exact()) == 1

    def test_alphabet_with_unseen_symbol(self):
        emp = multinomial_counts([2, 2, 0], alphabet=[0, 1, 2])
        np.testing.assert_allclose(emp.probs, [1 / 3, 0, 2 / 3])
        assert emp.as_dict() == {0: pytest.approx(1 / 3), 1: 0.0, 2: pytest.approx(2 / 3)}

    def test_unknown_symbol(self):
        with pytest.raises(ValueError):
            multinomial_counts("abz", alphabet="ab")

    def test_empty(self):
        with pytest.raises(ValueError):
            multinomial_counts([])

    @given(st.lists(st.integers(0, 4), min_size=1, max_size=200))
    def test_frequencies_sum_to_one(self, xs):
        emp = multinomial_counts(xs, alphabet=range(5))
        assert sum(emp.exact()) == 1
        assert emp.t == len(xs)
