"""Deviation bounds for the supremum of the self-normalized statistic.

All bounds control probabilities of the form::

    P( exists t <= n : t * I(Xbar_t; mu) >= delta )

and are evaluated in closed form with natural logarithms. Each evaluator
returns a :class:`BoundValue` that keeps the raw formula value (which may
exceed one) next to its clamped version.

Conventions
-----------
* For ``n == 1`` the peeling ceiling vanishes (``log 1 = 0``); horizon-based
  bounds then fall back to the single-time Chernoff bound in their own
  exponent (``2 exp(-delta)`` for the rate-function bounds).
* ``thm1_eta`` is the eta-parameterised form read off the last step of the
  peeling argument: ``2 ceil(log n / log(1+eta)) exp(-delta / (1+eta))``.
  It is derived from the proof rather than displayed as a result.
* ``thm2`` / ``thm2_opt`` require ``I(.; mu)`` to be log-concave. This is a
  caller obligation and is not checked.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

E = math.e


class BoundKind(str, enum.Enum):
    THM1 = "thm1"
    THM1_ETA = "thm1_eta"
    THM2 = "thm2"
    THM2_OPT = "thm2_opt"
    SUBGAUSSIAN = "subgaussian"
    THM3 = "thm3"
    THM3_OPT = "thm3_opt"
    HOEFFDING_SN = "hoeffding_sn"
    MULTINOMIAL = "multinomial"
    DISCOUNTED = "discounted"
    UNION = "union"


class BoundError(ValueError):
    """Invalid bound parameters, or an unreachable calibration target."""


@dataclass(frozen=True)
class BoundValue:
    """Value of a probability bound; ``raw`` may exceed one."""

    raw: float
    kind: str = ""
    params: dict = field(default_factory=dict, compare=False)

    @property
    def clamped(self) -> float:
        return min(self.raw, 1.0)

    @property
    def vacuous(self) -> bool:
        return self.raw >= 1.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "raw": self.raw,
            "clamped": self.clamped,
            "vacuous": self.vacuous,
        }


def _exp(log_prefactor: float, exponent: float) -> float:
    if log_prefactor == -math.inf:
        return 0.0
    try:
        return math.exp(log_prefactor + exponent)
    except OverflowError:
        return math.inf


def _check_delta(delta: float) -> float:
    # delta = 0 is accepted and simply yields a vacuous bound
    delta = float(delta)
    if math.isnan(delta) or delta < 0:
        raise BoundError("delta must be non-negative")
    return delta


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n or int(n) < 1:
        raise BoundError("horizon n must be a positive integer")
    return int(n)


def _check_eta(eta: float, upper: float = math.inf) -> float:
    eta = float(eta)
    if not 0 < eta < upper:
        raise BoundError(f"eta must lie in (0, {upper})")
    return eta


def _slices(n: int, eta: float) -> int:
    """Number of peeling slices ``ceil(log n / log(1 + eta))``."""
    return math.ceil(math.log(n) / math.log1p(eta))


def _bv(kind: BoundKind, raw: float, **params) -> BoundValue:
    return BoundValue(raw=raw, kind=kind.value, params=params)


def _infinite_delta(fn):
    """An infinite threshold is never crossed: the bound is exactly 0."""

    @functools.wraps(fn)
    def wrapper(delta, *args, **kwargs):
        if isinstance(delta, (int, float)) and delta == math.inf:
            value = fn(0.0, *args, **kwargs)
            return BoundValue(raw=0.0, kind=value.kind, params={**value.params, "delta": math.inf})
        return fn(delta, *args, **kwargs)

    return wrapper


@_infinite_delta
def bound_thm1(delta: float, n: int) -> BoundValue:
    """``2e ceil(delta log n) exp(-delta)``."""
    delta, n = _check_delta(delta), _check_n(n)
    if n == 1:
        return _bv(BoundKind.THM1, 2.0 * math.exp(-delta), delta=delta, n=n)
    k = math.ceil(delta * math.log(n))
    if k == 0:
        return _bv(BoundKind.THM1, 2.0 * math.exp(-delta), delta=delta, n=n)
    return _bv(BoundKind.THM1, _exp(math.log(2 * E * k), -delta), delta=delta, n=n)


@_infinite_delta
def bound_thm1_eta(delta: float, n: int, eta: float) -> BoundValue:
    """``2 ceil(log n / log(1+eta)) exp(-delta / (1+eta))`` (proof-derived form)."""
    delta, n, eta = _check_delta(delta), _check_n(n), _check_eta(eta)
    if n == 1:
        return _bv(BoundKind.THM1_ETA, 2.0 * math.exp(-delta), delta=delta, n=n, eta=eta)
    d = _slices(n, eta)
    return _bv(BoundKind.THM1_ETA, _exp(math.log(2 * d), -delta / (1 + eta)), delta=delta, n=n, eta=eta)


@_infinite_delta
def bound_thm2(delta: float, n: int, eta: float) -> BoundValue:
    """``2 ceil(log n / log(1+eta)) exp(-(1 - eta^2/8) delta)``; needs log-concave ``I``."""
    delta, n, eta = _check_delta(delta), _check_n(n), _check_eta(eta)
    if n == 1:
        return _bv(BoundKind.THM2, 2.0 * math.exp(-delta), delta=delta, n=n, eta=eta)
    d = _slices(n, eta)
    return _bv(BoundKind.THM2, _exp(math.log(2 * d), -(1 - eta * eta / 8) * delta), delta=delta, n=n, eta=eta)


@_infinite_delta
def bound_thm2_opt(delta: float, n: int) -> BoundValue:
    """``2 sqrt(e) ceil(sqrt(delta)/2 log n) exp(-delta)`` (``eta = 2/sqrt(delta)``)."""
    delta, n = _check_delta(delta), _check_n(n)
    k = math.ceil(math.sqrt(delta) / 2 * math.log(n)) if n > 1 else 0
    if k == 0:
        return _bv(BoundKind.THM2_OPT, 2.0 * math.exp(-delta), delta=delta, n=n)
    return _bv(BoundKind.THM2_OPT, _exp(math.log(2 * math.sqrt(E) * k), -delta), delta=delta, n=n)


@_infinite_delta
def bound_subgaussian(delta: float, n: int, eta: float) -> BoundValue:
    """Quadratic-rate refinement ``2 ceil(log n / log(1+eta)) exp(-(1 - eta^2/16) delta)``."""
    delta, n, eta = _check_delta(delta), _check_n(n), _check_eta(eta)
    if n == 1:
        return _bv(BoundKind.SUBGAUSSIAN, 2.0 * math.exp(-delta), delta=delta, n=n, eta=eta)
    d = _slices(n, eta)
    return _bv(
        BoundKind.SUBGAUSSIAN, _exp(math.log(2 * d), -(1 - eta * eta / 16) * delta), delta=delta, n=n, eta=eta
    )


def thm3_coefficient(delta: float, c: float) -> float:
    """Coefficient of ``log log t`` in the horizon-free threshold."""
    return delta * c / (delta - 1.0)


def thm3_opt_c(delta: float) -> float:
    return 1.0 + 1.0 / math.log(delta)


def thm3_threshold(delta: float, c: float) -> Callable[[float], float]:
    """Threshold ``t -> delta c / (delta - 1) log log t + delta``.

    Only defined for ``t >= 3`` (where ``log log t > 0``); the returned
    function raises :class:`BoundError` below that.
    """
    delta, c = _check_thm3(delta, c)
    coef = thm3_coefficient(delta, c)

    def threshold(t: float) -> float:
        if t < 3:
            raise BoundError("horizon-free threshold needs t >= 3")
        return coef * math.log(math.log(t)) + delta

    threshold.coefficient = coef  # type: ignore[attr-defined]
    threshold.delta = delta  # type: ignore[attr-defined]
    return threshold


def _check_thm3(delta: float, c: float) -> tuple[float, float]:
    delta, c = float(delta), float(c)
    if not 1 < delta < math.inf:
        raise BoundError("horizon-free bound needs a finite delta > 1")
    if not c > 1:
        raise BoundError("horizon-free bound needs c > 1")
    return delta, c


def bound_thm3(delta: float, c: float) -> tuple[Callable[[float], float], BoundValue]:
    """Horizon-free bound: threshold function and ``2e c delta^c / (c-1) exp(-delta)``."""
    delta, c = _check_thm3(delta, c)
    log_pref = math.log(2 * E * c / (c - 1)) + c * math.log(delta)
    return thm3_threshold(delta, c), _bv(BoundKind.THM3, _exp(log_pref, -delta), delta=delta, c=c)


def bound_thm3_opt(delta: float) -> tuple[Callable[[float], float], BoundValue]:
    """``c = 1 + 1/log(delta)`` specialisation: bound ``2 e^2 delta exp(-delta)``."""
    delta = float(delta)
    if not 1 < delta < math.inf:
        raise BoundError("horizon-free bound needs a finite delta > 1")
    c = thm3_opt_c(delta)
    raw = _exp(math.log(2 * E * E * delta), -delta)
    return thm3_threshold(delta, c), _bv(BoundKind.THM3_OPT, raw, delta=delta, c=c)


@_infinite_delta
def bound_hoeffding_sn(delta: float, n: int) -> BoundValue:
    """``4e ceil(delta^2 log n) exp(-2 delta^2)`` for ``sup_t |Xbar_t - mu| >= delta/sqrt(t)``."""
    delta, n = _check_delta(delta), _check_n(n)
    k = math.ceil(delta * delta * math.log(n)) if n > 1 else 0
    if k == 0:
        return _bv(BoundKind.HOEFFDING_SN, 2.0 * math.exp(-2 * delta * delta), delta=delta, n=n)
    return _bv(BoundKind.HOEFFDING_SN, _exp(math.log(4 * E * k), -2 * delta * delta), delta=delta, n=n)


@_infinite_delta
def bound_multinomial(delta: float, n: int, alphabet_size: int) -> BoundValue:
    """``2e (delta log n + |A|) exp(-delta / |A|)`` for ``sup_t t KL(P_t; P_0) >= delta``."""
    delta, n = _check_delta(delta), _check_n(n)
    a = int(alphabet_size)
    if a != alphabet_size or a < 2:
        raise BoundError("alphabet size must be an integer >= 2")
    pref = 2 * E * (delta * math.log(n) + a)
    return _bv(BoundKind.MULTINOMIAL, _exp(math.log(pref), -delta / a), delta=delta, n=n, alphabet_size=a)


def discounted_nu(gamma: float, n: int) -> float:
    """``nu_gamma(n) = sum_{t<=n} gamma^(n-t) = (1 - gamma^n) / (1 - gamma)``."""
    return -math.expm1(n * math.log(gamma)) / (1.0 - gamma)


@_infinite_delta
def bound_discounted(delta: float, gamma: float, n: int, B: float, eta: float) -> BoundValue:
    """One-sided discounted bound.

    ``ceil(log nu / log(1+eta)) exp(-(2 delta^2 / B^2)(1 - eta^2/16))`` with
    ``nu = (1 - gamma^n) / (1 - gamma)``.
    """
    delta, n, eta = _check_delta(delta), _check_n(n), _check_eta(eta, 4.0)
    gamma, B = float(gamma), float(B)
    if not 0 < gamma < 1:
        raise BoundError("gamma must lie in (0, 1)")
    if not B > 0:
        raise BoundError("B must be positive")
    params = dict(delta=delta, gamma=gamma, n=n, B=B, eta=eta)
    expo = -(2 * delta * delta / (B * B)) * (1 - eta * eta / 16)
    nu = discounted_nu(gamma, n)
    d = math.ceil(math.log(nu) / math.log1p(eta)) if nu > 1 else 0
    if d == 0:
        # single time: one-sided Hoeffding
        return _bv(BoundKind.DISCOUNTED, math.exp(-2 * delta * delta / (B * B)), **params)
    return _bv(BoundKind.DISCOUNTED, _exp(math.log(d), expo), **params)


@_infinite_delta
def bound_union_baseline(delta: float, n: int) -> BoundValue:
    """Naive union bound over all ``n`` sample sizes: ``2 n exp(-delta)``."""
    delta, n = _check_delta(delta), _check_n(n)
    return _bv(BoundKind.UNION, _exp(math.log(2 * n), -delta), delta=delta, n=n)


# ---------------------------------------------------------------------------
# queries


@dataclass(frozen=True)
class BoundQuery:
    """A bound kind together with every parameter it needs."""

    kind: BoundKind
    delta: float
    n: Optional[int] = None
    eta: Optional[float] = None
    c: Optional[float] = None
    alphabet_size: Optional[int] = None
    gamma: Optional[float] = None
    B: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", BoundKind(self.kind))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return {k: v for k, v in d.items() if v is not None}


def _need(q: BoundQuery, *names: str) -> list:
    vals = []
    for name in names:
        v = getattr(q, name)
        if v is None:
            raise BoundError(f"bound {q.kind.value!r} needs parameter {name!r}")
        vals.append(v)
    return vals


def evaluate(query: BoundQuery) -> BoundValue:
    """Evaluate any bound from a :class:`BoundQuery`."""
    k, q = query.kind, query
    if k is BoundKind.THM1:
        return bound_thm1(q.delta, *_need(q, "n"))
    if k is BoundKind.THM1_ETA:
        return bound_thm1_eta(q.delta, *_need(q, "n", "eta"))
    if k is BoundKind.THM2:
        return bound_thm2(q.delta, *_need(q, "n", "eta"))
    if k is BoundKind.THM2_OPT:
        return bound_thm2_opt(q.delta, *_need(q, "n"))
    if k is BoundKind.SUBGAUSSIAN:
        return bound_subgaussian(q.delta, *_need(q, "n", "eta"))
    if k is BoundKind.THM3:
        return bound_thm3(q.delta, *_need(q, "c"))[1]
    if k is BoundKind.THM3_OPT:
        return bound_thm3_opt(q.delta)[1]
    if k is BoundKind.HOEFFDING_SN:
        return bound_hoeffding_sn(q.delta, *_need(q, "n"))
    if k is BoundKind.MULTINOMIAL:
        return bound_multinomial(q.delta, *_need(q, "n", "alphabet_size"))
    if k is BoundKind.DISCOUNTED:
        gamma, n, B, eta = _need(q, "gamma", "n", "B", "eta")
        return bound_discounted(q.delta, gamma, n, B, eta)
    if k is BoundKind.UNION:
        return bound_union_baseline(q.delta, *_need(q, "n"))
    raise BoundError(f"unknown bound kind {k!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# calibration


@dataclass(frozen=True)
class _Envelope:
    """Smooth majorant of a bound (ceilings replaced by ``x + 1``)."""

    log_value: Callable[[float], float]
    start: float  # envelope is strictly decreasing on [start, inf)
    floor: float = 0.0  # infimum of the envelope as delta -> inf


def _envelope(query: BoundQuery) -> _Envelope:
    k, q = query.kind, query
    log = math.log
    if k is BoundKind.UNION:
        (n,) = _need(q, "n")
        return _Envelope(lambda d: log(2 * n) - d, 0.0)
    if k is BoundKind.THM3:
        (c,) = _need(q, "c")
        if not c > 1:
            raise BoundError("c must exceed 1")
        return _Envelope(lambda d: log(2 * E * c / (c - 1)) + c * log(d) - d, max(1.0, c))
    if k is BoundKind.THM3_OPT:
        return _Envelope(lambda d: log(2 * E * E * d) - d, 1.0)
    if k is BoundKind.MULTINOMIAL:
        n, a = _need(q, "n", "alphabet_size")
        n = _check_n(n)
        if int(a) != a or a < 2:
            raise BoundError("alphabet size must be an integer >= 2")
        L = log(n)
        # d/d delta of log(delta L + a) - delta/a vanishes at delta = a - a/L
        start = max(0.0, a - a / L) if L > 0 else 0.0
        return _Envelope(lambda d: log(2 * E * (d * L + a)) - d / a, start)

    (n,) = _need(q, "n")
    n = _check_n(n)
    L = log(n)
    if n == 1 and k is not BoundKind.DISCOUNTED:
        expo = 2.0 if k is BoundKind.HOEFFDING_SN else 1.0
        if k is BoundKind.HOEFFDING_SN:
            return _Envelope(lambda d: log(2) - expo * d * d, 0.0)
        return _Envelope(lambda d: log(2) - d, 0.0)
    if k is BoundKind.THM1:
        return _Envelope(lambda d: log(2 * E * (d * L + 1)) - d, 1.0)
    if k is BoundKind.THM2_OPT:
        return _Envelope(lambda d: log(2 * math.sqrt(E) * (math.sqrt(d) / 2 * L + 1)) - d, 1.0)
    if k is BoundKind.HOEFFDING_SN:
        return _Envelope(lambda d: log(4 * E * (d * d * L + 1)) - 2 * d * d, 1.0)
    if k in (BoundKind.THM1_ETA, BoundKind.THM2, BoundKind.SUBGAUSSIAN):
        (eta,) = _need(q, "eta")
        eta = _check_eta(eta)
        pref = log(2 * (L / math.log1p(eta) + 1))
        rate = {
            BoundKind.THM1_ETA: 1 / (1 + eta),
            BoundKind.THM2: 1 - eta * eta / 8,
            BoundKind.SUBGAUSSIAN: 1 - eta * eta / 16,
        }[k]
        if rate <= 0:
            return _Envelope(lambda d: pref - rate * d, 0.0, floor=2 * (L / math.log1p(eta) + 1))
        return _Envelope(lambda d: pref - rate * d, 0.0)
    if k is BoundKind.DISCOUNTED:
        gamma, B, eta = _need(q, "gamma", "B", "eta")
        bound_discounted(1.0, gamma, n, B, eta)  # parameter validation
        nu = discounted_nu(gamma, n)
        slices = log(nu) / math.log1p(eta) + 1 if nu > 1 else 1.0
        rate = 2 / (B * B) * ((1 - eta * eta / 16) if nu > 1 else 1.0)
        return _Envelope(lambda d: log(slices) - rate * d * d, 0.0)
    raise BoundError(f"cannot calibrate bound kind {k.value!r}")


def calibrate_delta(kind, alpha: float, n: Optional[int] = None, *, tol: float = 1e-9, **params) -> float:
    """Smallest threshold ``delta`` whose bound is at most ``alpha``.

    The search runs on a smooth majorant of the bound (every ceiling
    ``ceil(x)`` replaced by ``x + 1``) restricted to the range where that
    majorant is strictly decreasing, so the returned ``delta`` always
    satisfies ``evaluate(...).raw <= alpha``.

    Parameters
    ----------
    kind : BoundKind or str
    alpha : float
        Target risk in ``(0, 1)``.
    n : int, optional
        Horizon (not used by the horizon-free kinds).
    **params
        Extra bound parameters (``eta``, ``c``, ``alphabet_size``, ``gamma``, ``B``).

    Raises
    ------
    BoundError
        If ``alpha`` is outside ``(0, 1)`` or below the envelope's infimum.
    """
    alpha = float(alpha)
    if not 0 < alpha < 1:
        raise BoundError("alpha must lie in (0, 1)")
    query = BoundQuery(kind=kind, delta=1.0, n=n, **params)
    env = _envelope(query)
    if env.floor > 0:
        raise BoundError(f"alpha={alpha} unreachable: minimum achievable risk is {env.floor:.6g}")
    target = math.log(alpha)
    lo = env.start
    if lo > 0 and env.log_value(lo) <= target:
        return lo
    hi = max(2.0 * lo, 1.0)
    while env.log_value(hi) > target:
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:
            raise BoundError("calibration failed to bracket the target risk")  # pragma: no cover
    # invariant: log_value(lo) > target >= log_value(hi)
    for _ in range(300):
        if hi - lo <= tol * 0.5:
            break
        mid = 0.5 * (lo + hi)
        if env.log_value(mid) > target:
            lo = mid
        else:
            hi = mid
    return hi


def envelope_value(kind, delta: float, n: Optional[int] = None, **params) -> float:
    """Value of the smooth majorant used by :func:`calibrate_delta`."""
    env = _envelope(BoundQuery(kind=kind, delta=delta, n=n, **params))
    return math.exp(env.log_value(float(delta)))
