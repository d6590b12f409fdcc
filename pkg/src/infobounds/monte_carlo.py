"""Monte Carlo validation of the deviation bounds.

Each experiment simulates ``reps`` independent paths, records whether the
statistic of interest crosses its threshold anywhere on the path, and
compares the empirical frequency with the theoretical bound.

Replication ``r`` always draws from its own stream, derived from
``(seed, r)`` with :class:`numpy.random.SeedSequence`. Chunking and thread
count therefore never change the result: only integer exceedance counts
are reduced across chunks.
"""
from __future__ import annotations

import enum
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import xlogy

from . import peeling_bounds as pb
from .estimators import DiscountedState
from .peeling_bounds import BoundKind, BoundQuery, BoundValue
from .rate_functions import RateFamily, family_from_name

#: elements per simulated chunk (rows * horizon)
CHUNK_ELEMENTS = 1 << 22


class ConfigError(ValueError):
    """Inconsistent experiment configuration."""


class Statistic(str, enum.Enum):
    SUP_FIXED_HORIZON = "sup"
    ANYTIME = "anytime"
    DISCOUNTED = "discounted"
    MULTINOMIAL_KL = "multinomial"
    HOEFFDING_ABS = "hoeffding"
    FIXED_TIME = "fixed_time"


def rep_rng(seed: int, rep: int) -> np.random.Generator:
    """Independent generator for replication ``rep`` of master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(rep),)))


# ---------------------------------------------------------------------------
# sampling laws


def _law_default(family: str) -> str:
    return {
        "bernoulli": "bernoulli",
        "bounded": "beta",
        "quadratic": "gaussian",
        "exponential": "exponential",
        "poisson": "poisson",
        "gamma": "gamma",
    }[family]


_LAWS_FOR = {
    "bernoulli": {"bernoulli", "constant"},
    "bounded": {"beta", "bernoulli", "uniform01", "constant"},
    "quadratic": {"gaussian", "uniform", "constant"},
    "exponential": {"exponential", "constant"},
    "poisson": {"poisson", "constant"},
    "gamma": {"gamma", "constant"},
}


def make_sampler(law: str, *, K: float = 1.0, shape: float = 1.0, concentration: float = 2.0) -> Callable:
    """Return ``draw(rng, mu, size)`` producing samples of mean ``mu``.

    ``mu`` may be a scalar or an array broadcastable to ``size``.
    ``beta`` draws from ``Beta(mu*c, (1-mu)*c)`` on ``[0, 1]`` (bounded but
    not Bernoulli); ``uniform01`` is the two-point-free uniform law on an
    interval of ``[0, 1]`` centred at ``mu``.
    """
    if law == "bernoulli":
        return lambda rng, mu, size: (rng.random(size) < mu).astype(float)
    if law == "beta":
        c = float(concentration)

        def beta(rng, mu, size):
            mu = np.broadcast_to(np.asarray(mu, dtype=float), size)
            inner = np.clip(mu, 1e-12, 1 - 1e-12)
            x = rng.beta(inner * c, (1 - inner) * c, size)
            # degenerate laws at the ends of [0, 1]
            return np.where(mu <= 0, 0.0, np.where(mu >= 1, 1.0, x))

        return beta
    if law == "uniform01":

        def uniform01(rng, mu, size):
            half = np.minimum(mu, 1 - np.asarray(mu))
            return mu + half * (2 * rng.random(size) - 1)

        return uniform01
    if law == "gaussian":
        sigma = K / 2.0
        return lambda rng, mu, size: mu + sigma * rng.standard_normal(size)
    if law == "uniform":
        return lambda rng, mu, size: mu + K * (rng.random(size) - 0.5)
    if law == "exponential":
        return lambda rng, mu, size: rng.exponential(1.0, size) * mu
    if law == "poisson":
        return lambda rng, mu, size: rng.poisson(mu, size).astype(float)
    if law == "gamma":
        return lambda rng, mu, size: rng.gamma(shape, 1.0, size) * (np.asarray(mu) / shape)
    if law == "constant":
        return lambda rng, mu, size: np.broadcast_to(np.asarray(mu, dtype=float), size).copy()
    raise ConfigError(f"unknown sampling law {law!r}")


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    """One Monte Carlo experiment.

    ``n`` is the horizon; for ``anytime`` runs it is the truncation time
    ``t_max``. ``mu`` is a scalar, or (discounted runs) a schedule of length
    ``n``. Multinomial runs take the true law in ``p0`` instead.
    """

    statistic: Statistic
    delta: float
    n: int
    reps: int = 10_000
    seed: int = 0
    family: str = "bernoulli"
    mu: float | Sequence[float] = 0.5
    K: float = 1.0
    shape: float = 1.0
    law: Optional[str] = None
    concentration: float = 2.0
    bound: Optional[str] = None
    eta: Optional[float] = None
    c: Optional[float] = None
    gamma: Optional[float] = None
    B: Optional[float] = None
    observe_prob: float = 1.0
    p0: Optional[Sequence[float]] = None
    workers: int = 1
    chunk_reps: Optional[int] = None

    def __post_init__(self):
        self.statistic = Statistic(self.statistic)
        if isinstance(self.mu, (list, tuple, np.ndarray)):
            self.mu = [float(m) for m in self.mu]
        else:
            self.mu = float(self.mu)
        if self.p0 is not None:
            self.p0 = [float(p) for p in self.p0]
        self.delta = float(self.delta)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["statistic"] = self.statistic.value
        d["bound"] = self.bound_kind().value
        for key in ("workers", "chunk_reps"):  # execution details, not results
            d.pop(key)
        return d

    # -- derived quantities -------------------------------------------------

    def rate_family(self) -> RateFamily:
        return family_from_name(self.family, K=self.K, shape=self.shape)

    def sampling_law(self) -> str:
        return self.law or _law_default(self.family)

    def bound_kind(self) -> BoundKind:
        if self.bound is not None:
            return BoundKind(self.bound)
        return {
            Statistic.SUP_FIXED_HORIZON: BoundKind.THM1,
            Statistic.HOEFFDING_ABS: BoundKind.HOEFFDING_SN,
            Statistic.ANYTIME: BoundKind.THM3 if self.c is not None else BoundKind.THM3_OPT,
            Statistic.DISCOUNTED: BoundKind.DISCOUNTED,
            Statistic.MULTINOMIAL_KL: BoundKind.MULTINOMIAL,
            Statistic.FIXED_TIME: BoundKind.UNION,
        }[self.statistic]

    def validate(self) -> "ExperimentConfig":
        if int(self.reps) != self.reps or self.reps < 1:
            raise ConfigError("reps must be a positive integer")
        if int(self.n) != self.n or self.n < 1:
            raise ConfigError("n must be a positive integer")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if math.isnan(self.delta) or self.delta < 0:
            raise ConfigError("delta must be non-negative")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        st = self.statistic
        kind = self.bound_kind()
        if st is Statistic.MULTINOMIAL_KL:
            if self.p0 is None:
                raise ConfigError("multinomial statistic needs the true law p0")
            p0 = np.asarray(self.p0)
            if p0.size < 2 or np.any(p0 < 0) or abs(p0.sum() - 1) > 1e-9:
                raise ConfigError("p0 must be a probability vector over >= 2 symbols")
            if kind is not BoundKind.MULTINOMIAL:
                raise ConfigError("multinomial statistic is checked against the multinomial bound")
            return self
        if self.p0 is not None:
            raise ConfigError(f"statistic {st.value!r} is scalar; p0 only applies to multinomial runs")
        if self.family not in _LAWS_FOR:
            raise ConfigError(f"unknown family {self.family!r}")
        if self.sampling_law() not in _LAWS_FOR[self.family]:
            raise ConfigError(f"law {self.sampling_law()!r} is not dominated by the {self.family} rate")
        fam = self.rate_family()
        if st is Statistic.DISCOUNTED:
            for name in ("gamma", "B", "eta"):
                if getattr(self, name) is None:
                    raise ConfigError(f"discounted statistic needs {name}")
            if self.family not in ("bernoulli", "bounded"):
                raise ConfigError("discounted runs simulate bounded variables (bernoulli/bounded)")
            sched = np.atleast_1d(np.asarray(self.mu, dtype=float))
            if sched.size not in (1, self.n):
                raise ConfigError("mu schedule length must equal n")
            if np.any(sched < 0) or np.any(sched > self.B):
                raise ConfigError("discounted means must lie in [0, B]")
            if not 0 < self.observe_prob <= 1:
                raise ConfigError("observe_prob must lie in (0, 1]")
            if kind is not BoundKind.DISCOUNTED:
                raise ConfigError("discounted statistic is checked against the discounted bound")
            pb.bound_discounted(max(self.delta, 0.0), self.gamma, self.n, self.B, self.eta)
            return self
        if not isinstance(self.mu, float):
            raise ConfigError("mu schedules are only supported for discounted runs")
        if not fam.mu_domain.contains(self.mu):
            raise ConfigError(f"mu={self.mu} outside {self.family} domain")
        if st is Statistic.HOEFFDING_ABS:
            if self.family not in ("bernoulli", "bounded"):
                raise ConfigError("hoeffding statistic needs [0, 1]-valued variables")
            if kind is not BoundKind.HOEFFDING_SN:
                raise ConfigError("hoeffding statistic is checked against hoeffding_sn")
        if st is Statistic.ANYTIME:
            if not 1 < self.delta < math.inf:
                raise ConfigError("anytime threshold needs a finite delta > 1")
            if kind not in (BoundKind.THM3, BoundKind.THM3_OPT):
                raise ConfigError("anytime statistic is checked against thm3/thm3_opt")
            if kind is BoundKind.THM3 and not (self.c is not None and self.c > 1):
                raise ConfigError("thm3 needs c > 1")
        if st is Statistic.SUP_FIXED_HORIZON:
            allowed = {BoundKind.THM1, BoundKind.THM1_ETA, BoundKind.THM2, BoundKind.THM2_OPT,
                       BoundKind.SUBGAUSSIAN, BoundKind.UNION}
            if kind not in allowed:
                raise ConfigError(f"bound {kind.value!r} does not apply to the sup statistic")
            if kind in (BoundKind.THM1_ETA, BoundKind.THM2, BoundKind.SUBGAUSSIAN) and self.eta is None:
                raise ConfigError(f"bound {kind.value!r} needs eta")
            if kind is BoundKind.SUBGAUSSIAN and self.family != "quadratic":
                raise ConfigError("subgaussian bound is stated for the quadratic rate")
        if st is Statistic.FIXED_TIME and kind is not BoundKind.UNION:
            raise ConfigError("fixed-time statistic is checked against the single-time Chernoff bound")
        return self

    def theoretical_bound(self) -> BoundValue:
        kind = self.bound_kind()
        if self.statistic is Statistic.FIXED_TIME:
            return pb.bound_union_baseline(self.delta, 1)
        if kind is BoundKind.THM3:
            return pb.bound_thm3(self.delta, self.c)[1]
        if kind is BoundKind.THM3_OPT:
            return pb.bound_thm3_opt(self.delta)[1]
        q = BoundQuery(
            kind=kind,
            delta=self.delta,
            n=self.n,
            eta=self.eta,
            gamma=self.gamma,
            B=self.B,
            alphabet_size=len(self.p0) if self.p0 is not None else None,
        )
        return pb.evaluate(q)


# ---------------------------------------------------------------------------
# report


@dataclass
class ExperimentReport:
    statistic: str
    config: dict
    reps: int
    exceedances: int
    p_hat: float
    stderr: float
    bound: dict
    verdict: str
    sharpness: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    elapsed_seconds: float = 0.0

    @property
    def dominated(self) -> bool:
        return self.verdict == "dominated"

    def to_dict(self) -> dict:
        return asdict(self)


def _verdict(p_hat: float, stderr: float, bound: BoundValue) -> str:
    return "dominated" if p_hat - 3.0 * stderr <= bound.clamped else "violated"


# ---------------------------------------------------------------------------
# chunk kernels: each returns the number of exceeding replications in [r0, r1)


def _draw_rows(cfg: ExperimentConfig, r0: int, r1: int, mu, n: int) -> np.ndarray:
    draw = make_sampler(cfg.sampling_law(), K=cfg.K, shape=cfg.shape, concentration=cfg.concentration)
    return np.stack([draw(rep_rng(cfg.seed, r), mu, n) for r in range(r0, r1)])


def _scalar_chunk(cfg: ExperimentConfig, r0: int, r1: int) -> int:
    n, mu, delta = cfg.n, cfg.mu, cfg.delta
    x = _draw_rows(cfg, r0, r1, mu, n)
    S = np.cumsum(x, axis=1)
    t = np.arange(1, n + 1, dtype=float)
    xbar = S / t
    st = cfg.statistic
    if st is Statistic.HOEFFDING_ABS:
        hit = np.abs(xbar - mu) >= delta / np.sqrt(t)
        return int(np.count_nonzero(hit.any(axis=1)))
    fam = cfg.rate_family()
    if st is Statistic.FIXED_TIME:
        with np.errstate(all="ignore"):
            stat = n * fam.rate(xbar[:, -1], mu)
        return int(np.count_nonzero(stat >= delta))
    with np.errstate(all="ignore"):
        stat = t * fam.rate(xbar, mu)
    if st is Statistic.SUP_FIXED_HORIZON:
        return int(np.count_nonzero((stat >= delta).any(axis=1)))
    # anytime: thresholds only defined from t = 3 on
    thr_fn = pb.thm3_threshold(delta, cfg.c if cfg.c is not None else pb.thm3_opt_c(delta))
    coef = thr_fn.coefficient
    tt = t[2:]
    thr = coef * np.log(np.log(tt)) + delta
    return int(np.count_nonzero((stat[:, 2:] >= thr).any(axis=1)))


def _discounted_chunk(cfg: ExperimentConfig, r0: int, r1: int) -> int:
    n, B = cfg.n, float(cfg.B)
    sched = np.broadcast_to(np.asarray(cfg.mu, dtype=float), (n,))
    draw = make_sampler(cfg.sampling_law(), concentration=cfg.concentration)
    rows_x, rows_e = [], []
    for r in range(r0, r1):
        rng = rep_rng(cfg.seed, r)
        rows_x.append(B * draw(rng, sched / B, n))
        if cfg.observe_prob < 1:
            rows_e.append(rng.random(n) < cfg.observe_prob)
    x = np.stack(rows_x)
    eps = np.stack(rows_e) if rows_e else np.ones_like(x, dtype=bool)
    state = DiscountedState.zeros(cfg.gamma, r1 - r0)
    for j in range(n):
        state.update(eps[:, j], x[:, j], sched[j])
    return int(np.count_nonzero(state.fluctuation >= cfg.delta))


def _multinomial_chunk(cfg: ExperimentConfig, r0: int, r1: int) -> int:
    n, delta = cfg.n, cfg.delta
    p0 = np.asarray(cfg.p0, dtype=float)
    k = p0.size
    cum = np.cumsum(p0)
    cum[-1] = np.inf
    sym = np.stack([np.searchsorted(cum, rep_rng(cfg.seed, r).random(n), side="right") for r in range(r0, r1)])
    counts = np.cumsum(sym[..., None] == np.arange(k), axis=1, dtype=float)
    t = np.arange(1, n + 1, dtype=float)
    # t * KL(P_t; p0) = sum_a c_a log c_a - sum_a c_a log p0_a - t log t
    with np.errstate(divide="ignore", invalid="ignore"):
        log_p0 = np.where(p0 > 0, np.log(np.where(p0 > 0, p0, 1.0)), 0.0)
    stat = xlogy(counts, counts).sum(axis=2) - counts @ log_p0 - xlogy(t, t)
    return int(np.count_nonzero((stat >= delta).any(axis=1)))


def _kernel(cfg: ExperimentConfig) -> Callable[[ExperimentConfig, int, int], int]:
    if cfg.statistic is Statistic.DISCOUNTED:
        return _discounted_chunk
    if cfg.statistic is Statistic.MULTINOMIAL_KL:
        return _multinomial_chunk
    return _scalar_chunk


def _chunks(cfg: ExperimentConfig) -> list[tuple[int, int]]:
    width = cfg.n * (len(cfg.p0) if cfg.p0 is not None else 1)
    size = cfg.chunk_reps or max(1, CHUNK_ELEMENTS // width)
    return [(r0, min(r0 + size, cfg.reps)) for r0 in range(0, cfg.reps, size)]


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run any experiment and compare its exceedance frequency with its bound."""
    cfg.validate()
    start = time.perf_counter()
    bound = cfg.theoretical_bound()
    notes = []
    if math.isinf(cfg.delta):
        exceed = 0
        notes.append("infinite threshold: exceedance impossible")
    else:
        kernel = _kernel(cfg)
        chunks = _chunks(cfg)
        if cfg.workers > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(cfg.workers) as pool:
                counts = list(pool.map(lambda c: kernel(cfg, *c), chunks))
        else:
            counts = [kernel(cfg, *c) for c in chunks]
        exceed = int(sum(counts))
    R = int(cfg.reps)
    p_hat = exceed / R
    stderr = math.sqrt(p_hat * (1 - p_hat) / R)
    sharp = {"ratio_to_bound": p_hat / bound.raw if bound.raw > 0 else None}
    if cfg.statistic in (Statistic.SUP_FIXED_HORIZON, Statistic.HOEFFDING_ABS):
        union = pb.bound_union_baseline(
            2 * cfg.delta**2 if cfg.statistic is Statistic.HOEFFDING_ABS else cfg.delta, cfg.n
        )
        sharp["union_bound"] = union.raw
        sharp["ratio_to_union"] = p_hat / union.raw if union.raw > 0 else None
    if cfg.statistic is Statistic.ANYTIME:
        notes.append(
            f"infinite-time event truncated at t_max={cfg.n}; truncation can only lower the exceedance frequency"
        )
        notes.append("times t < 3 skipped: the threshold uses log log t")
    return ExperimentReport(
        statistic=cfg.statistic.value,
        config=cfg.to_dict(),
        reps=R,
        exceedances=exceed,
        p_hat=p_hat,
        stderr=stderr,
        bound=bound.to_dict(),
        verdict=_verdict(p_hat, stderr, bound),
        sharpness=sharp,
        notes=notes,
        elapsed_seconds=time.perf_counter() - start,
    )


def _require(cfg: ExperimentConfig, *stats: Statistic) -> None:
    if cfg.statistic not in stats:
        raise ConfigError(f"statistic {cfg.statistic.value!r} not handled here; expected {[s.value for s in stats]}")


def run_coverage(cfg: ExperimentConfig) -> ExperimentReport:
    """Fixed-horizon experiments: ``sup``, ``hoeffding`` and ``fixed_time``."""
    _require(cfg, Statistic.SUP_FIXED_HORIZON, Statistic.HOEFFDING_ABS, Statistic.FIXED_TIME)
    return run_experiment(cfg)


def run_anytime(cfg: ExperimentConfig) -> ExperimentReport:
    """Horizon-free threshold, truncated at ``t_max = cfg.n``."""
    _require(cfg, Statistic.ANYTIME)
    return run_experiment(cfg)


def run_discounted(cfg: ExperimentConfig) -> ExperimentReport:
    """One-sided discounted fluctuation event at time ``n``."""
    _require(cfg, Statistic.DISCOUNTED)
    return run_experiment(cfg)


def run_multinomial(cfg: ExperimentConfig) -> ExperimentReport:
    """``exists t <= n : t KL(P_t; p0) >= delta`` on a finite alphabet."""
    _require(cfg, Statistic.MULTINOMIAL_KL)
    return run_experiment(cfg)


def domination_suite(seed: int = 20240601, scale: float = 1.0) -> dict[str, ExperimentConfig]:
    """Designated configuration for every implemented bound.

    ``scale`` multiplies the replication counts (1.0 gives the full
    ``1e5`` / ``1e4`` suite).
    """
    big = max(1, int(round(100_000 * scale)))
    small = max(1, int(round(10_000 * scale)))
    S = Statistic
    return {
        "thm1": ExperimentConfig(S.SUP_FIXED_HORIZON, 8.0, 200, big, seed, "bernoulli", 0.3),
        "thm1_eta": ExperimentConfig(S.SUP_FIXED_HORIZON, 8.0, 200, big, seed + 1, "bounded", 0.3,
                                     bound="thm1_eta", eta=0.5),
        "thm2_opt": ExperimentConfig(S.SUP_FIXED_HORIZON, 8.0, 200, big, seed + 2, "quadratic", 0.0,
                                     bound="thm2_opt"),
        "subgaussian": ExperimentConfig(S.SUP_FIXED_HORIZON, 8.0, 200, big, seed + 3, "quadratic", 0.0,
                                        bound="subgaussian", eta=1.0),
        "thm3_opt": ExperimentConfig(S.ANYTIME, 8.0, 100_000, small, seed + 4, "bernoulli", 0.5),
        "hoeffding_sn": ExperimentConfig(S.HOEFFDING_ABS, 2.0, 200, big, seed + 5, "bounded", 0.3),
        "multinomial": ExperimentConfig(S.MULTINOMIAL_KL, 30.0, 1000, big, seed + 6, p0=[1 / 3] * 3),
        "discounted": ExperimentConfig(S.DISCOUNTED, 3.0, 10_000, small, seed + 7, "bernoulli", 0.5,
                                       gamma=0.99, B=1.0, eta=1.0),
    }
