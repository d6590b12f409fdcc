"""UCB bandit policies whose indices are informational confidence bounds.

Replications advance in lockstep so that the index computation is one
vectorised call per round. Each replication owns a reward table drawn
from its own ``(seed, rep)`` stream, so two policies run with the same
seed face exactly the same rewards (paired comparison).

Policies
--------
``klucb``
    Upper edge of ``{mu : N kl(xbar, mu) <= delta(t)}``.
``ucb``
    Hoeffding index ``xbar + sqrt(delta(t) / (2 N))``.
``discounted_ucb``
    Discounted mean plus a radius obtained by inverting the exponent of the
    discounted deviation bound. The bound itself does not come with an
    index; this reconstruction is::

        B * sqrt(scale * log nu_gamma(t) / (2 (1 - eta^2/16))) * sqrt(N_g2) / N_g
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .confidence_sets import upper_conf
from .estimators import DiscountedState, StreamState
from .monte_carlo import ConfigError, make_sampler, rep_rng
from .peeling_bounds import discounted_nu
from .rate_functions import Bernoulli

POLICIES = ("klucb", "ucb", "discounted_ucb")
_ALIASES = {
    "klucb": "klucb",
    "kl-ucb": "klucb",
    "kl_ucb": "klucb",
    "ucb": "ucb",
    "ucb1": "ucb",
    "hoeffding": "ucb",
    "hoeffding_ucb": "ucb",
    "discounted_ucb": "discounted_ucb",
    "discounted-ucb": "discounted_ucb",
    "d-ucb": "discounted_ucb",
    "ducb": "discounted_ucb",
}

_BERNOULLI = Bernoulli()


def policy_name(name: str) -> str:
    try:
        return _ALIASES[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown policy {name!r}; expected one of {POLICIES}") from None


def default_threshold(t, c: float = 3.0):
    """Exploration level ``log t + c log log t``.

    The ``log log t`` term is dropped while ``log t <= 1`` (``t < e``) where
    it would be negative or undefined.
    """
    lt = np.log(np.asarray(t, dtype=float))
    out = lt + c * np.log(np.maximum(lt, 1.0))
    return float(out) if out.ndim == 0 else out


def klucb_index(state: StreamState, t: int, delta_fn: Callable = default_threshold, family=_BERNOULLI):
    """KL-UCB index of one arm (or an array of arms); ``+inf`` if never played."""
    if t < 1:
        raise ValueError("t must be >= 1")
    N = np.asarray(state.N, dtype=float)
    delta = delta_fn(t)
    with np.errstate(invalid="ignore", divide="ignore"):
        xbar = np.where(N > 0, np.asarray(state.S, dtype=float) / np.maximum(N, 1), 0.0)
    played = N > 0
    out = np.full(N.shape, np.inf)
    if np.any(played):
        out[played] = upper_conf(xbar[played], N[played], delta, family)
    return float(out) if out.ndim == 0 else out


def hoeffding_index(state: StreamState, t: int, delta_fn: Callable = default_threshold):
    """``xbar + sqrt(delta(t) / (2 N))``; ``+inf`` if never played."""
    N = np.asarray(state.N, dtype=float)
    delta = delta_fn(t)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(N > 0, np.asarray(state.S, dtype=float) / N + np.sqrt(delta / (2 * N)), np.inf)
    return float(out) if out.ndim == 0 else out


def discounted_index(state: DiscountedState, t: int, eta: float = 1.0, B: float = 1.0, scale: float = 1.0):
    """Discounted-UCB index (see module docstring); ``+inf`` if never played."""
    log_nu = max(math.log(discounted_nu(state.gamma, t)), 0.0)
    level = B * math.sqrt(scale * log_nu / (2.0 * (1.0 - eta * eta / 16.0)))
    N_g = np.asarray(state.N_g, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(
            N_g > 0,
            np.asarray(state.S_g) / N_g + level * np.sqrt(np.asarray(state.N_g2)) / N_g,
            np.inf,
        )
    return float(out) if out.ndim == 0 else out


@dataclass
class BanditConfig:
    """Arms, horizon and policy of a bandit experiment.

    ``means`` holds one mean per arm. For non-stationary runs ``schedule``
    lists ``(start_time, means)`` breakpoints (1-based, first at ``t = 1``)
    and replaces ``means``.
    """

    means: Sequence[float]
    horizon: int
    policy: str = "klucb"
    reps: int = 100
    seed: int = 0
    law: str = "bernoulli"
    concentration: float = 2.0
    threshold_c: float = 3.0
    gamma: float = 0.99
    eta: float = 1.0
    B: float = 1.0
    radius_scale: float = 1.0
    schedule: Optional[Sequence[tuple[int, Sequence[float]]]] = None
    chunk_reps: int = 256

    def __post_init__(self):
        self.policy = policy_name(self.policy)
        self.means = [float(m) for m in self.means]
        if self.schedule is not None:
            self.schedule = [(int(s), [float(m) for m in ms]) for s, ms in self.schedule]

    def validate(self) -> "BanditConfig":
        K = self.n_arms
        if K < 2:
            raise ConfigError("a bandit needs at least two arms")
        if int(self.horizon) != self.horizon or self.horizon < K:
            raise ConfigError("horizon must be an integer >= number of arms")
        if int(self.reps) != self.reps or self.reps < 1:
            raise ConfigError("reps must be a positive integer")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        m = self.mean_matrix()
        if np.any(m < 0) or np.any(m > 1):
            raise ConfigError("arm means must lie in [0, 1]")
        if self.law not in ("bernoulli", "beta"):
            raise ConfigError("reward law must be 'bernoulli' or 'beta'")
        if self.policy == "discounted_ucb":
            if not 0 < self.gamma < 1:
                raise ConfigError("gamma must lie in (0, 1)")
            if not 0 < self.eta < 4:
                raise ConfigError("eta must lie in (0, 4)")
        return self

    @property
    def n_arms(self) -> int:
        if self.schedule:
            return len(self.schedule[0][1])
        return len(self.means)

    def mean_matrix(self) -> np.ndarray:
        """``(horizon, K)`` array of arm means at every round."""
        T = int(self.horizon)
        if not self.schedule:
            return np.tile(np.asarray(self.means, dtype=float), (T, 1))
        sched = sorted(self.schedule)
        if sched[0][0] != 1:
            raise ConfigError("schedule must start at t = 1")
        if any(len(ms) != len(sched[0][1]) for _, ms in sched):
            raise ConfigError("every schedule segment needs the same number of arms")
        out = np.empty((T, len(sched[0][1])))
        for i, (start, ms) in enumerate(sched):
            stop = sched[i + 1][0] - 1 if i + 1 < len(sched) else T
            out[start - 1 : stop] = ms
        return out

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d.pop("chunk_reps")
        return d


@dataclass
class BanditTrace:
    """Per-replication outcome of one policy.

    ``regret[r, t-1]`` is the cumulative pseudo-regret after round ``t``;
    ``counts[r, k]`` the number of pulls of arm ``k``.
    """

    policy: str
    regret: np.ndarray
    choices: np.ndarray
    rewards: np.ndarray
    counts: np.ndarray
    config: dict = field(default_factory=dict)

    @property
    def mean_regret(self) -> np.ndarray:
        return self.regret.mean(axis=0)

    @property
    def stderr(self) -> np.ndarray:
        R = self.regret.shape[0]
        if R < 2:
            return np.zeros(self.regret.shape[1])
        return self.regret.std(axis=0, ddof=1) / math.sqrt(R)

    @property
    def final_regret(self) -> np.ndarray:
        return self.regret[:, -1]

    def play_fraction(self, arm: int) -> float:
        return float(self.counts[:, arm].sum() / self.counts.sum())


def _reward_tables(cfg: BanditConfig, r0: int, r1: int, means: np.ndarray) -> np.ndarray:
    draw = make_sampler(cfg.law, concentration=cfg.concentration)
    return np.stack([draw(rep_rng(cfg.seed, r), means, means.shape) for r in range(r0, r1)])


def _simulate_chunk(cfg: BanditConfig, r0: int, r1: int, means: np.ndarray):
    T, K = means.shape
    R = r1 - r0
    table = _reward_tables(cfg, r0, r1, means)
    rows = np.arange(R)
    arms = np.arange(K)
    best = means.max(axis=1)
    inst_regret = np.empty((R, T))
    choices = np.empty((R, T), dtype=np.int32)
    rewards = np.empty((R, T))
    thr = lambda t: default_threshold(t, cfg.threshold_c)  # noqa: E731
    if cfg.policy == "discounted_ucb":
        state = DiscountedState.zeros(cfg.gamma, (R, K))
    else:
        state = StreamState.zeros((R, K))
    for t in range(1, T + 1):
        if cfg.policy == "klucb":
            idx = klucb_index(state, t, thr)
        elif cfg.policy == "ucb":
            idx = hoeffding_index(state, t, thr)
        else:
            idx = discounted_index(state, t, cfg.eta, cfg.B, cfg.radius_scale)
        a = np.argmax(idx, axis=1)  # first maximiser: ties go to the lowest arm id
        x = table[rows, t - 1, a]
        obs = a[:, None] == arms
        if cfg.policy == "discounted_ucb":
            state.update(obs, x[:, None], means[t - 1][None, :])
        else:
            state.update(obs, x[:, None])
        choices[:, t - 1] = a
        rewards[:, t - 1] = x
        inst_regret[:, t - 1] = best[t - 1] - means[t - 1, a]
    counts = np.stack([(choices == k).sum(axis=1) for k in range(K)], axis=1)
    return np.cumsum(inst_regret, axis=1), choices, rewards, counts


def run_policy(cfg: BanditConfig) -> BanditTrace:
    """Simulate ``cfg.reps`` replications of ``cfg.policy``."""
    cfg.validate()
    means = cfg.mean_matrix()
    parts = [
        _simulate_chunk(cfg, r0, min(r0 + cfg.chunk_reps, cfg.reps), means)
        for r0 in range(0, cfg.reps, cfg.chunk_reps)
    ]
    regret, choices, rewards, counts = (np.concatenate(p, axis=0) for p in zip(*parts))
    return BanditTrace(cfg.policy, regret, choices, rewards, counts, cfg.to_dict())


def run_paired(cfg: BanditConfig, policies: Sequence[str]) -> dict[str, BanditTrace]:
    """Run several policies on the same reward tables (same seed)."""
    out = {}
    for p in policies:
        c = BanditConfig(**{**cfg.__dict__, "policy": p})
        out[c.policy] = run_policy(c)
    return out


def checkpoints(T: int, every: int) -> np.ndarray:
    ts = np.arange(every, T + 1, every)
    if ts.size == 0 or ts[-1] != T:
        ts = np.append(ts, T)
    return ts


def regret_rows(traces: dict[str, BanditTrace] | Sequence[BanditTrace], every: int = 1) -> list[dict]:
    """Regret curve rows ``{t, mean_regret, stderr, policy}`` at checkpoints."""
    if isinstance(traces, dict):
        traces = list(traces.values())
    rows = []
    for tr in traces:
        mean, se = tr.mean_regret, tr.stderr
        for t in checkpoints(mean.size, every):
            rows.append({"t": int(t), "mean_regret": float(mean[t - 1]), "stderr": float(se[t - 1]),
                         "policy": tr.policy})
    return rows


def regret_csv(traces, every: int = 1, header_comment: Optional[str] = None) -> str:
    """CSV text with columns ``t,mean_regret,stderr,policy``."""
    buf = io.StringIO()
    if header_comment:
        for line in header_comment.splitlines():
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "mean_regret", "stderr", "policy"])
    for row in regret_rows(traces, every):
        w.writerow([row["t"], f"{row['mean_regret']:.12g}", f"{row['stderr']:.12g}", row["policy"]])
    return buf.getvalue()
