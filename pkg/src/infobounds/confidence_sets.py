"""Informational confidence sets.

The scalar set is the neighbourhood ``{mu : N * I(xbar; mu) <= delta}``;
its endpoints are found by bisection, which converges unconditionally
because ``I(xbar; .)`` is monotone on each side of ``xbar``. The same
vectorised solver serves single queries and whole arrays of UCB indices.

For finite alphabets the set is the KL ball
``{Q : KL(P_hat; Q) <= delta / t}`` around the empirical law.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .estimators import EmpiricalDistribution
from .peeling_bounds import BoundKind, BoundQuery, calibrate_delta, evaluate
from .rate_functions import Bernoulli, DomainError, ExpFamilyModel, RateFamily, _binary_kl

# bisection stops at float collapse; this cap only guards against edges
# near zero, which can need ~1075 halvings to reach the subnormal range
MAX_ITER = 1100


def _check_xbar(family: RateFamily, xbar: np.ndarray) -> None:
    dom = family.mu_domain
    ok = dom.closure_contains(xbar)
    if np.all(ok):
        with np.errstate(all="ignore"):
            ok = family.rate(xbar, xbar) == 0
    if not np.all(ok):
        bad = np.asarray(xbar)[~np.asarray(ok, dtype=bool)].ravel()[:3]
        raise DomainError(f"empirical mean(s) {bad.tolist()} outside the {family.name} support")


def _solve_edges(xbar, N, delta, family: RateFamily, upper: bool):
    """Vectorised endpoint search. Returns ``(value, clipped)`` arrays."""
    xbar, N, delta = np.broadcast_arrays(
        np.asarray(xbar, dtype=float), np.asarray(N, dtype=float), np.asarray(delta, dtype=float)
    )
    if np.any(N < 0) or np.any(delta < 0) or np.any(np.isnan(delta)):
        raise DomainError("count and delta must be non-negative")
    shape = xbar.shape
    xbar, N, delta = xbar.ravel(), N.ravel(), delta.ravel()
    value = xbar.copy()
    clipped = np.zeros(xbar.shape, dtype=bool)
    edge = family.mu_domain.hi if upper else family.mu_domain.lo
    sign = 1.0 if upper else -1.0

    empty = N == 0
    value[empty] = edge
    clipped[empty] = True
    active = ~empty & (delta > 0)
    if np.any(active):
        _check_xbar(family, xbar[active])

    def feasible(mu, idx):
        with np.errstate(all="ignore"):
            return N[idx] * family.rate(xbar[idx], mu) <= delta[idx]

    idx = np.flatnonzero(active)
    if idx.size:
        inner = xbar[idx].copy()
        if math.isfinite(edge):
            at_edge = feasible(np.full(idx.size, edge), idx)
            value[idx[at_edge]] = edge
            clipped[idx[at_edge]] = True
            idx, inner = idx[~at_edge], inner[~at_edge]
            outer = np.full(idx.size, edge)
        else:
            # grow the bracket geometrically until the rate exceeds the radius
            scale = np.maximum(np.abs(inner), 1.0)
            outer = inner + sign * scale
            grow = feasible(outer, idx)
            k = 0
            while np.any(grow):
                inner = np.where(grow, outer, inner)
                scale = np.where(grow, scale * 2.0, scale)
                outer = np.where(grow, inner + sign * scale, outer)
                grow = grow & feasible(outer, idx)
                k += 1
                if k > 2000:  # pragma: no cover
                    raise RuntimeError("failed to bracket confidence endpoint")
        # invariant: `inner` feasible, `outer` infeasible
        for _ in range(MAX_ITER):
            mid = 0.5 * (inner + outer)
            done = (mid == inner) | (mid == outer)
            if np.all(done):
                break
            ok = feasible(mid, idx)
            inner = np.where(ok & ~done, mid, inner)
            outer = np.where(~ok & ~done, mid, outer)
        value[idx] = inner
    clipped |= ~empty & (value == edge)
    return value.reshape(shape), clipped.reshape(shape)


def upper_conf(xbar, N, delta, family: RateFamily):
    """Largest ``mu >= xbar`` with ``N * I(xbar; mu) <= delta``.

    Returns the supremum of the mean domain when the whole right side is
    inside the set (and for ``N == 0``). Scalars in, float out.
    """
    v, _ = _solve_edges(xbar, N, delta, family, upper=True)
    return float(v) if v.ndim == 0 else v


def lower_conf(xbar, N, delta, family: RateFamily):
    """Smallest ``mu <= xbar`` with ``N * I(xbar; mu) <= delta``."""
    v, _ = _solve_edges(xbar, N, delta, family, upper=False)
    return float(v) if v.ndim == 0 else v


@dataclass(frozen=True)
class RiskCertificate:
    """Which bound certifies joint coverage, and at what level."""

    kind: str
    n: int
    alpha: float
    delta: float
    bound: float
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "alpha": self.alpha,
            "delta": self.delta,
            "bound": self.bound,
            "params": dict(self.params),
        }


@dataclass(frozen=True)
class ConfidenceSet:
    lower: float
    upper: float
    xbar: float
    delta: float
    count: float
    family: RateFamily
    lower_clipped: bool = False
    upper_clipped: bool = False
    certificate: Optional[RiskCertificate] = None

    @property
    def clipped(self) -> bool:
        return self.lower_clipped or self.upper_clipped

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __contains__(self, mu: float) -> bool:
        return self.lower <= mu <= self.upper

    def to_dict(self) -> dict:
        d = {
            "lower": self.lower,
            "upper": self.upper,
            "xbar": self.xbar,
            "delta": self.delta,
            "count": self.count,
            "family": self.family.describe(),
            "lower_clipped": self.lower_clipped,
            "upper_clipped": self.upper_clipped,
        }
        if self.certificate is not None:
            d["certificate"] = self.certificate.to_dict()
        return d


def interval(xbar: float, N: float, delta: float, family: RateFamily) -> ConfidenceSet:
    """The set ``{mu : N I(xbar; mu) <= delta}`` with clipping flags."""
    lo, lo_c = _solve_edges(xbar, N, delta, family, upper=False)
    hi, hi_c = _solve_edges(xbar, N, delta, family, upper=True)
    return ConfidenceSet(float(lo), float(hi), float(xbar), float(delta), float(N), family, bool(lo_c), bool(hi_c))


def interval_with_certificate(
    xbar: float,
    N: float,
    n: int,
    alpha: float,
    family: RateFamily,
    kind: BoundKind | str = BoundKind.THM1,
    **params,
) -> ConfidenceSet:
    """Interval whose sequence over ``t <= n`` is jointly valid at risk ``alpha``.

    ``delta`` is calibrated with :func:`calibrate_delta` for the given bound
    kind; the certificate records the bound value actually achieved.
    """
    kind = BoundKind(kind)
    delta = calibrate_delta(kind, alpha, n, **params)
    bound = evaluate(BoundQuery(kind=kind, delta=delta, n=n, **params))
    cs = interval(xbar, N, delta, family)
    cert = RiskCertificate(kind.value, int(n), float(alpha), delta, bound.raw, dict(params))
    return ConfidenceSet(**{**cs.__dict__, "certificate": cert})


@dataclass(frozen=True)
class ParameterRegion:
    """Natural-parameter interval of an exponential model, with its mean interval."""

    theta_lower: float
    theta_upper: float
    mean_set: ConfidenceSet


def exp_family_region(xbar: float, N: float, delta: float, model: ExpFamilyModel) -> ParameterRegion:
    """``{theta : KL(P_{mu^-1(xbar)}; P_theta) <= delta / N}``.

    The mean map is increasing, so the region is the image of the mean
    interval under its inverse.
    """
    cs = interval(xbar, N, delta, model.family)
    with np.errstate(divide="ignore"):
        lo = float(model.mean_inverse(cs.lower))
        hi = float(model.mean_inverse(cs.upper))
    return ParameterRegion(lo, hi, cs)


# ---------------------------------------------------------------------------
# finite alphabets


def _as_distribution(p, name: str = "distribution") -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise DomainError(f"{name} must be a non-empty vector")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise DomainError(f"{name} must be non-negative and sum to one")
    return p


def kl_divergence(P, Q) -> float:
    """``KL(P; Q)`` on a finite alphabet; ``+inf`` if ``Q`` misses part of ``P``'s support."""
    P = _as_distribution(P, "P")
    Q = _as_distribution(Q, "Q")
    if P.shape != Q.shape:
        raise DomainError("P and Q must share the alphabet")
    pos = P > 0
    if np.any(Q[pos] == 0):
        return math.inf
    return float(max(np.sum(P[pos] * np.log(P[pos] / Q[pos])), 0.0))


def kl_symbolwise_sum(P, Q) -> float:
    """``sum_a kl(P(a), Q(a))``, an upper bound on ``KL(P; Q)``."""
    P = _as_distribution(P, "P")
    Q = _as_distribution(Q, "Q")
    return float(np.sum(_binary_kl(P, Q)))


@dataclass(frozen=True)
class SimplexRegion:
    """KL ball ``{Q : KL(center; Q) <= radius}`` on the simplex over ``alphabet``."""

    center: np.ndarray
    radius: float
    alphabet: tuple

    def __post_init__(self):
        object.__setattr__(self, "center", _as_distribution(self.center, "center"))
        if len(self.alphabet) != self.center.size:
            raise DomainError("alphabet and center sizes differ")
        if not self.radius >= 0:
            raise DomainError("radius must be non-negative")

    @classmethod
    def from_empirical(cls, emp: EmpiricalDistribution, delta: float) -> "SimplexRegion":
        """Region of radius ``delta / t`` around an empirical law of ``t`` symbols."""
        return cls(emp.probs, float(delta) / emp.t, emp.alphabet)

    def contains(self, Q: Sequence[float]) -> bool:
        return kl_divergence(self.center, Q) <= self.radius

    __contains__ = contains

    def symbol_box(self) -> np.ndarray:
        """Per-symbol Bernoulli intervals of radius ``radius / |A|``.

        Returns an ``(|A|, 2)`` array. By ``KL(P;Q) <= sum_a kl(P(a);Q(a))``,
        every distribution inside all the intervals lies in the region.
        """
        k = self.center.size
        fam = Bernoulli()
        lo = lower_conf(self.center, 1.0, self.radius / k, fam)
        hi = upper_conf(self.center, 1.0, self.radius / k, fam)
        return np.column_stack([lo, hi])
