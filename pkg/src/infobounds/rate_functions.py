"""Rate functions of one-parameter families.

A rate function ``I(x; mu)`` is the Legendre transform of a dominating
log-moment-generating function ``phi(lam; mu)``::

    I(x; mu) = sup_lam { lam * x - phi(lam; mu) }

Every family below provides a closed form for ``I``, for ``phi`` and its
derivative, and for the maximiser ``lam(x)`` solving ``phi'(lam) = x``.
The family methods are vectorised and perform no validation; the
module-level functions :func:`rate`, :func:`lambda_of_x` and :func:`kl`
validate their inputs and return plain floats for scalar arguments.

``+inf`` is returned (never a large sentinel) wherever the rate is infinite.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import expit, logit

INF = math.inf


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


@dataclass(frozen=True)
class Interval:
    """Real interval with explicit open/closed ends (ends may be infinite)."""

    lo: float
    hi: float
    lo_closed: bool = False
    hi_closed: bool = False

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        above = x >= self.lo if self.lo_closed else x > self.lo
        below = x <= self.hi if self.hi_closed else x < self.hi
        return above & below

    def closure_contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x >= self.lo) & (x <= self.hi)

    def __str__(self) -> str:
        return f"{'[' if self.lo_closed else '('}{self.lo}, {self.hi}{']' if self.hi_closed else ')'}"


REALS = Interval(-INF, INF)
POSITIVE = Interval(0.0, INF)
UNIT = Interval(0.0, 1.0, True, True)


def _out(a):
    a = np.asarray(a, dtype=float)
    return float(a) if a.ndim == 0 else a


def _binary_kl(p, q):
    # 0 log 0 = 0; kl(p, 0) = inf for p > 0; kl(p, 1) = inf for p < 1
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        left = np.where(p > 0, p * np.log(p / q), 0.0)
        right = np.where(p < 1, (1 - p) * np.log((1 - p) / (1 - q)), 0.0)
    return left + right


def kl(p, q):
    """Binary relative entropy ``kl(p, q)`` in nats.

    Uses the conventions ``0 log 0 = 0``, ``kl(p, 0) = inf`` for ``p > 0`` and
    ``kl(p, 1) = inf`` for ``p < 1``. Accepts scalars or arrays.

    Raises
    ------
    DomainError
        If ``p`` or ``q`` is outside ``[0, 1]``.
    """
    p_arr = np.asarray(p, dtype=float)
    q_arr = np.asarray(q, dtype=float)
    if not (np.all(UNIT.contains(p_arr)) and np.all(UNIT.contains(q_arr))):
        raise DomainError("kl arguments must lie in [0, 1]")
    return _out(_binary_kl(p_arr, q_arr))


class RateFamily(ABC):
    """A parameterised rate function ``I(.; mu)`` and its lmgf."""

    name: str = "abstract"
    #: values of ``mu`` for which the family is defined
    mu_domain: Interval = REALS
    #: open interval where ``I(.; mu)`` is finite and smooth (``lam(x)`` exists)
    x_open: Interval = REALS

    @abstractmethod
    def rate(self, x, mu):
        """Vectorised ``I(x; mu)``; ``mu`` may sit on the closure of ``mu_domain``."""

    @abstractmethod
    def phi(self, lam, mu):
        """Vectorised lmgf ``phi(lam; mu)``."""

    @abstractmethod
    def dphi(self, lam, mu):
        """Vectorised derivative ``phi'(lam; mu)``."""

    @abstractmethod
    def lam(self, x, mu):
        """Vectorised solution of ``phi'(lam; mu) = x``."""

    def params(self) -> dict:
        return {}

    def describe(self) -> dict:
        return {"family": self.name, **self.params()}

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self.params() == other.params()

    def __hash__(self) -> int:
        return hash((type(self).__name__, tuple(sorted(self.params().items()))))


class Bernoulli(RateFamily):
    """Bernoulli variables: ``I(x; mu) = kl(x, mu)`` on ``[0, 1]``."""

    name = "bernoulli"
    mu_domain = UNIT
    x_open = Interval(0.0, 1.0)

    def rate(self, x, mu):
        x = np.asarray(x, dtype=float)
        inside = UNIT.contains(x)
        return np.where(inside, _binary_kl(np.clip(x, 0.0, 1.0), mu), INF)

    def phi(self, lam, mu):
        lam = np.asarray(lam, dtype=float)
        mu = np.asarray(mu, dtype=float)
        with np.errstate(divide="ignore"):
            return np.logaddexp(np.log1p(-mu), np.log(mu) + lam)

    def dphi(self, lam, mu):
        with np.errstate(divide="ignore"):
            return expit(np.asarray(lam, dtype=float) + logit(mu))

    def lam(self, x, mu):
        with np.errstate(divide="ignore"):
            return logit(np.asarray(x, dtype=float)) - logit(mu)


class BoundedKL(Bernoulli):
    """Any ``[0, 1]``-valued law, dominated by the Bernoulli lmgf (Hoeffding).

    Same rate function as :class:`Bernoulli`; the distinction only matters
    to simulators, which draw non-Bernoulli bounded samples for it.
    """

    name = "bounded"


@dataclass(frozen=True, eq=False, repr=False)
class Quadratic(RateFamily):
    """Sub-gaussian family of range ``K``: ``I(x; mu) = 2 (x - mu)^2 / K^2``."""

    K: float = 1.0
    name = "quadratic"
    mu_domain = REALS
    x_open = REALS

    def __post_init__(self):
        if not self.K > 0:
            raise DomainError("range K must be positive")

    def params(self) -> dict:
        return {"K": self.K}

    def rate(self, x, mu):
        d = np.asarray(x, dtype=float) - np.asarray(mu, dtype=float)
        return 2.0 * d * d / (self.K * self.K)

    def phi(self, lam, mu):
        lam = np.asarray(lam, dtype=float)
        return lam * np.asarray(mu, dtype=float) + self.K**2 * lam * lam / 8.0

    def dphi(self, lam, mu):
        return np.asarray(mu, dtype=float) + self.K**2 * np.asarray(lam, dtype=float) / 4.0

    def lam(self, x, mu):
        return 4.0 * (np.asarray(x, dtype=float) - np.asarray(mu, dtype=float)) / self.K**2


def _gamma_rate(x, mu, shape):
    # shape * (r - 1 - log r), r = x / mu, written via log1p for r near 1
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        u = x / mu - 1.0
        val = shape * (u - np.log1p(u))
    return np.where((x > 0) & (mu > 0) & np.isfinite(val), val, INF)


class Exponential(RateFamily):
    """Exponential laws of mean ``mu``: ``I(x; mu) = x/mu - 1 - log(x/mu)``."""

    name = "exponential"
    mu_domain = POSITIVE
    x_open = POSITIVE

    def rate(self, x, mu):
        return _gamma_rate(x, mu, 1.0)

    def phi(self, lam, mu):
        lam = np.asarray(lam, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            v = -np.log1p(-lam * np.asarray(mu, dtype=float))
        return np.where(np.isnan(v), INF, v)

    def dphi(self, lam, mu):
        mu = np.asarray(mu, dtype=float)
        return mu / (1.0 - np.asarray(lam, dtype=float) * mu)

    def lam(self, x, mu):
        return 1.0 / np.asarray(mu, dtype=float) - 1.0 / np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False, repr=False)
class GammaFixedShape(RateFamily):
    """Gamma laws with fixed shape ``k`` and mean ``mu`` (scale ``mu / k``).

    ``I(x; mu) = k * (x/mu - 1 - log(x/mu))``.
    """

    shape: float = 1.0
    name = "gamma"
    mu_domain = POSITIVE
    x_open = POSITIVE

    def __post_init__(self):
        if not self.shape > 0:
            raise DomainError("gamma shape must be positive")

    def params(self) -> dict:
        return {"shape": self.shape}

    def rate(self, x, mu):
        return _gamma_rate(x, mu, self.shape)

    def phi(self, lam, mu):
        k = self.shape
        lam = np.asarray(lam, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            v = -k * np.log1p(-lam * np.asarray(mu, dtype=float) / k)
        return np.where(np.isnan(v), INF, v)

    def dphi(self, lam, mu):
        mu = np.asarray(mu, dtype=float)
        return mu / (1.0 - np.asarray(lam, dtype=float) * mu / self.shape)

    def lam(self, x, mu):
        k = self.shape
        return k / np.asarray(mu, dtype=float) - k / np.asarray(x, dtype=float)


class Poisson(RateFamily):
    """Poisson laws: ``I(x; mu) = mu - x + x log(x/mu)`` for ``x >= 0``."""

    name = "poisson"
    mu_domain = POSITIVE
    x_open = POSITIVE

    def rate(self, x, mu):
        x = np.asarray(x, dtype=float)
        mu = np.asarray(mu, dtype=float)
        # x * (u - log1p(u)) with u = mu/x - 1 avoids cancelling two large logs
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            u = mu / x - 1.0
            val = np.where(x > 0, x * (u - np.log1p(u)), mu)
        val = np.where((mu == 0) & (x > 0), INF, val)
        return np.where(x >= 0, np.maximum(val, 0.0), INF)

    def phi(self, lam, mu):
        return np.asarray(mu, dtype=float) * np.expm1(np.asarray(lam, dtype=float))

    def dphi(self, lam, mu):
        return np.asarray(mu, dtype=float) * np.exp(np.asarray(lam, dtype=float))

    def lam(self, x, mu):
        return np.log(np.asarray(x, dtype=float) / np.asarray(mu, dtype=float))


class ExplicitPhi(RateFamily):
    """Rate function of a user-supplied lmgf, computed numerically.

    Parameters
    ----------
    phi, dphi : callable ``(lam, mu) -> float``
        The lmgf and its derivative on ``(lam_lo, lam_hi)``; ``dphi(0, mu)``
        must equal ``mu``.
    d2phi : callable, optional
        Second derivative. Enables Newton steps; bisection is used otherwise.
    lam_lo, lam_hi : float
        Ends of the open interval on which ``phi`` is finite.
    mu_domain : Interval
        Admissible expectations.
    """

    name = "explicit"
    _TOL = 1e-12

    def __init__(
        self,
        phi: Callable[[float, float], float],
        dphi: Callable[[float, float], float],
        d2phi: Optional[Callable[[float, float], float]] = None,
        lam_lo: float = -INF,
        lam_hi: float = INF,
        mu_domain: Interval = REALS,
        label: str = "explicit",
    ):
        if not lam_lo < 0 < lam_hi:
            raise DomainError("lmgf interval must contain 0 in its interior")
        self._phi, self._dphi, self._d2phi = phi, dphi, d2phi
        self.lam_lo, self.lam_hi = float(lam_lo), float(lam_hi)
        self.mu_domain = mu_domain
        self.x_open = REALS
        self.label = label

    def params(self) -> dict:
        return {"label": self.label, "lam_lo": self.lam_lo, "lam_hi": self.lam_hi}

    def phi(self, lam, mu):
        return np.vectorize(self._phi, otypes=[float])(lam, mu)

    def dphi(self, lam, mu):
        return np.vectorize(self._dphi, otypes=[float])(lam, mu)

    def _solve(self, x: float, mu: float) -> tuple[float, bool]:
        """Return ``(lam, interior)``; ``interior`` is False when ``x`` is out of range."""
        g = lambda l: self._dphi(l, mu) - x  # noqa: E731
        if abs(g(0.0)) <= self._TOL:
            return 0.0, True
        sign = 1.0 if g(0.0) < 0 else -1.0
        edge = self.lam_hi if sign > 0 else self.lam_lo
        inner, step = 0.0, 1.0
        # bracket the root between `inner` and `outer`
        while True:
            outer = sign * step
            if (sign > 0 and outer >= edge) or (sign < 0 and outer <= edge):
                if math.isinf(edge):
                    return edge, False
                outer = edge
                break
            if sign * g(outer) >= 0:
                break
            inner, step = outer, step * 2.0
            if step > 2.0**60:
                return sign * INF, False
        lo, hi = sorted((inner, outer))
        lam = 0.5 * (lo + hi)
        for _ in range(500):
            val = g(lam)
            if abs(val) <= self._TOL:
                return lam, True
            if val < 0:
                lo = lam
            else:
                hi = lam
            nxt = None
            if self._d2phi is not None:
                d2 = self._d2phi(lam, mu)
                if d2 > 0:
                    cand = lam - val / d2
                    if lo < cand < hi:
                        nxt = cand
            lam = 0.5 * (lo + hi) if nxt is None else nxt
            if hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(lam)):
                break
        if lam in (self.lam_lo, self.lam_hi) or abs(lam - edge) <= 1e-9 * max(1.0, abs(edge)):
            return edge, False
        return lam, True

    def _rate1(self, x: float, mu: float) -> float:
        lam, interior = self._solve(x, mu)
        if math.isinf(lam):
            return INF
        if not interior:
            # supremum sits at the end of the lmgf interval
            try:
                val = lam * x - self._phi(lam, mu)
            except (ValueError, ZeroDivisionError, OverflowError):
                return INF
            return val if np.isfinite(val) else INF
        return max(lam * x - self._phi(lam, mu), 0.0)

    def rate(self, x, mu):
        return np.vectorize(self._rate1, otypes=[float])(x, mu)

    def lam(self, x, mu):
        def one(xx, mm):
            lam, interior = self._solve(xx, mm)
            if not interior:
                raise DomainError(f"x={xx} is outside the finite-rate interval")
            return lam

        return np.vectorize(one, otypes=[float])(x, mu)


def _check_mu(family: RateFamily, mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if not np.all(family.mu_domain.contains(mu)):
        raise DomainError(f"mu outside {family.name} domain {family.mu_domain}")
    return mu


def rate(family: RateFamily, x, mu):
    """``I(x; mu)`` for ``family``; ``+inf`` outside the finite-rate domain.

    Raises
    ------
    DomainError
        If ``mu`` is not an admissible expectation of the family.
    """
    mu = _check_mu(family, mu)
    return _out(family.rate(x, mu))


def lambda_of_x(family: RateFamily, x, mu):
    """The unique ``lam`` with ``phi'(lam; mu) = x`` (so ``I = lam*x - phi(lam)``)."""
    mu = _check_mu(family, mu)
    x = np.asarray(x, dtype=float)
    if not np.all(family.x_open.contains(x)):
        raise DomainError(f"x outside the finite-rate interval {family.x_open}")
    return _out(family.lam(x, mu))


# ---------------------------------------------------------------------------
# canonical one-parameter exponential families


@dataclass(frozen=True)
class ExpFamilyModel:
    """Canonical exponential model ``p_theta(x) = exp(x theta - b(theta) + c(x))``.

    ``db`` is the mean map ``mu(theta) = b'(theta)``; ``mean_inverse`` is its
    inverse. ``family`` is the rate family whose ``I(mu(beta); mu(theta))``
    equals the Bregman divergence of ``b``.
    """

    name: str
    b: Callable
    db: Callable
    mean_inverse: Callable
    theta_domain: Interval
    family: RateFamily = field(compare=False)


def bregman_kl(model: ExpFamilyModel, beta, theta):
    """``KL(P_beta; P_theta) = b(theta) - b(beta) - b'(beta) (theta - beta)``."""
    beta = np.asarray(beta, dtype=float)
    theta = np.asarray(theta, dtype=float)
    dom = model.theta_domain
    if not (np.all(dom.contains(beta)) and np.all(dom.contains(theta))):
        raise DomainError(f"natural parameters must lie in {dom}")
    val = model.b(theta) - model.b(beta) - model.db(beta) * (theta - beta)
    return _out(np.maximum(val, 0.0))


BERNOULLI_MODEL = ExpFamilyModel(
    "bernoulli",
    b=lambda t: np.logaddexp(0.0, t),
    db=expit,
    mean_inverse=logit,
    theta_domain=REALS,
    family=Bernoulli(),
)

POISSON_MODEL = ExpFamilyModel(
    "poisson", b=np.exp, db=np.exp, mean_inverse=np.log, theta_domain=REALS, family=Poisson()
)

EXPONENTIAL_MODEL = ExpFamilyModel(
    "exponential",
    b=lambda t: -np.log(-np.asarray(t, dtype=float)),
    db=lambda t: -1.0 / np.asarray(t, dtype=float),
    mean_inverse=lambda m: -1.0 / np.asarray(m, dtype=float),
    theta_domain=Interval(-INF, 0.0),
    family=Exponential(),
)

# unit-variance gaussian: I = (x - mu)^2 / 2, i.e. range K = 2
GAUSSIAN_MODEL = ExpFamilyModel(
    "gaussian",
    b=lambda t: 0.5 * np.asarray(t, dtype=float) ** 2,
    db=lambda t: np.asarray(t, dtype=float),
    mean_inverse=lambda m: np.asarray(m, dtype=float),
    theta_domain=REALS,
    family=Quadratic(2.0),
)


def gamma_model(shape: float) -> ExpFamilyModel:
    """Gamma model with fixed ``shape``: ``b(theta) = -shape log(-theta)``."""
    k = float(shape)
    return ExpFamilyModel(
        f"gamma(shape={k})",
        b=lambda t: -k * np.log(-np.asarray(t, dtype=float)),
        db=lambda t: -k / np.asarray(t, dtype=float),
        mean_inverse=lambda m: -k / np.asarray(m, dtype=float),
        theta_domain=Interval(-INF, 0.0),
        family=GammaFixedShape(k),
    )


_FAMILIES = {
    "bernoulli": Bernoulli,
    "bounded": BoundedKL,
    "quadratic": Quadratic,
    "exponential": Exponential,
    "poisson": Poisson,
    "gamma": GammaFixedShape,
}


def family_from_name(name: str, **params) -> RateFamily:
    """Build a closed-form family by name (``bernoulli``, ``quadratic``, ...)."""
    try:
        cls = _FAMILIES[name.lower()]
    except KeyError:
        raise DomainError(f"unknown family {name!r}; expected one of {sorted(_FAMILIES)}") from None
    if cls is Quadratic:
        return Quadratic(float(params.get("K", 1.0)))
    if cls is GammaFixedShape:
        return GammaFixedShape(float(params.get("shape", 1.0)))
    return cls()
