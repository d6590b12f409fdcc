import math

import numpy as np
import pytest

from infobounds.bandit_sim import (
    BanditConfig,
    checkpoints,
    default_threshold,
    discounted_index,
    hoeffding_index,
    klucb_index,
    policy_name,
    regret_csv,
    regret_rows,
    run_paired,
    run_policy,
)
from infobounds.estimators import DiscountedState, StreamState
from infobounds.monte_carlo import ConfigError
from infobounds.rate_functions import Quadratic

UPPER_REF = 0.59900828355203012  # mpmath bisection on 100 kl(0.5, u) = 2


class TestIndices:
    def test_unplayed_arm_is_infinite(self):
        assert klucb_index(StreamState(), 5) == math.inf
        assert hoeffding_index(StreamState(), 5) == math.inf
        assert discounted_index(DiscountedState(0.9), 5) == math.inf

    def test_klucb_reference(self):
        st = StreamState(100, 50.0, 100)
        assert klucb_index(st, 10, lambda t: 2.0) == pytest.approx(0.5987, abs=1e-3)
        assert klucb_index(st, 10, lambda t: 2.0) == pytest.approx(UPPER_REF, abs=1e-12)

    def test_klucb_monotone_in_threshold(self):
        st = StreamState(40, 13.0, 40)
        vals = [klucb_index(st, 1, lambda t, d=d: d) for d in np.linspace(0, 20, 41)]
        assert np.all(np.diff(vals) >= 0)
        assert vals[0] == pytest.approx(13 / 40)
        assert np.all(np.asarray(vals[1:]) > 13 / 40)

    def test_hoeffding_matches_quadratic_klucb(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            N = int(rng.integers(1, 500))
            st = StreamState(N, float(rng.uniform(0, N)), N)
            t = int(rng.integers(1, 10**5))
            a = hoeffding_index(st, t)
            b = klucb_index(st, t, family=Quadratic(1.0))
            assert a == pytest.approx(b, abs=1e-9)

    def test_scaling_threshold_keeps_argmax(self):
        st = StreamState(30, np.array([12.0, 12.0, 12.0]), np.array([10, 10, 10]))
        st.S = np.array([3.0, 7.0, 5.0])
        for scale in (0.5, 1.0, 4.0):
            idx = klucb_index(st, 30, lambda t, s=scale: s * default_threshold(t))
            assert int(np.argmax(idx)) == 1

    def test_default_threshold(self):
        assert default_threshold(1) == 0.0
        assert default_threshold(2) == pytest.approx(math.log(2))
        t = 1000.0
        assert default_threshold(t) == pytest.approx(math.log(t) + 3 * math.log(math.log(t)))

    def test_discounted_index_above_mean(self):
        st = DiscountedState.zeros(0.95, 2)
        for _ in range(50):
            st.update(np.array([True, False]), np.array([0.4, 0.0]))
        idx = discounted_index(st, 50)
        assert idx[1] == math.inf and idx[0] > st.mean[0]


class TestConfig:
    def test_aliases(self):
        assert policy_name("UCB1") == "ucb" and policy_name("kl-ucb") == "klucb" and policy_name("d-ucb") == "discounted_ucb"
        with pytest.raises(ConfigError):
            policy_name("thompson")

    @pytest.mark.parametrize(
        "kw",
        [{"means": [0.5]}, {"horizon": 1}, {"means": [0.5, 1.2]}, {"reps": 0}, {"law": "gaussian"},
         {"policy": "discounted_ucb", "gamma": 1.0}],
    )
    def test_rejects(self, kw):
        base = dict(means=[0.2, 0.4], horizon=100)
        base.update(kw)
        with pytest.raises(ConfigError):
            BanditConfig(**base).validate()

    def test_schedule(self):
        cfg = BanditConfig(means=[], horizon=6, schedule=[(1, [0.1, 0.9]), (4, [0.9, 0.1])])
        m = cfg.mean_matrix()
        np.testing.assert_array_equal(m[:3], [[0.1, 0.9]] * 3)
        np.testing.assert_array_equal(m[3:], [[0.9, 0.1]] * 3)


class TestRuns:
    def test_trace_invariants(self):
        tr = run_policy(BanditConfig([0.3, 0.6, 0.5], 300, "klucb", reps=20, seed=3).validate())
        assert np.all(np.diff(tr.regret, axis=1) >= -1e-12)
        assert np.all(tr.counts.sum(axis=1) == 300)
        assert tr.choices.shape == (20, 300) and tr.rewards.shape == (20, 300)

    def test_identical_arms_have_no_regret(self):
        for policy in ("klucb", "ucb", "discounted_ucb"):
            tr = run_policy(BanditConfig([0.4, 0.4], 200, policy, reps=5, seed=1).validate())
            assert np.all(tr.regret == 0.0)

    def test_ties_go_to_lowest_arm(self):
        tr = run_policy(BanditConfig([0.5, 0.5, 0.5], 3, "klucb", reps=2, seed=0).validate())
        np.testing.assert_array_equal(tr.choices[:, :3], [[0, 1, 2], [0, 1, 2]])

    def test_easy_problem_plays_best_arm(self):
        tr = run_policy(BanditConfig([0.9, 0.1], 1000, "klucb", reps=100, seed=7).validate())
        assert tr.play_fraction(0) > 0.9

    def test_reproducible(self):
        cfg = BanditConfig([0.2, 0.5], 300, "ucb", reps=10, seed=12).validate()
        a, b = run_policy(cfg), run_policy(cfg)
        np.testing.assert_array_equal(a.choices, b.choices)
        np.testing.assert_array_equal(a.regret, b.regret)

    def test_chunking_does_not_change_results(self):
        cfg = BanditConfig([0.2, 0.5], 200, "klucb", reps=9, seed=2, chunk_reps=4).validate()
        ref = run_policy(BanditConfig([0.2, 0.5], 200, "klucb", reps=9, seed=2).validate())
        np.testing.assert_array_equal(run_policy(cfg).choices, ref.choices)

    def test_paired_runs_share_rewards(self):
        traces = run_paired(BanditConfig([0.3, 0.5], 100, reps=4, seed=9).validate(), ["klucb", "ucb"])
        a, b = traces["klucb"], traces["ucb"]
        # the first pull of each arm sees the same reward table entry
        np.testing.assert_array_equal(a.rewards[:, :2], b.rewards[:, :2])

    def test_discounted_tracks_switch(self):
        cfg = BanditConfig([], 2000, "discounted_ucb", reps=20, seed=4, gamma=0.98,
                           schedule=[(1, [0.8, 0.2]), (1001, [0.2, 0.8])]).validate()
        tr = run_policy(cfg)
        late = (tr.choices[:, 1500:] == 1).mean()
        assert late > 0.7

    def test_csv(self):
        traces = run_paired(BanditConfig([0.3, 0.5], 50, reps=3, seed=1).validate(), ["klucb", "ucb"])
        text = regret_csv(traces, every=25, header_comment="manifest: {}")
        lines = text.splitlines()
        assert lines[0] == "# manifest: {}"
        assert lines[1] == "t,mean_regret,stderr,policy"
        assert len(lines) == 2 + 2 * 2
        rows = regret_rows(traces, every=25)
        assert [r["t"] for r in rows] == [25, 50, 25, 50]
        np.testing.assert_array_equal(checkpoints(50, 20), [20, 40, 50])
