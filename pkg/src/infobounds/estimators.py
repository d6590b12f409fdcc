"""Online sufficient statistics for self-normalized averages.

The states below work with scalar fields or, unchanged, with numpy arrays
of any shape (one entry per replication or per arm); simulators rely on
the latter to advance many independent streams in lockstep.

Observation indicators must be predictable: whether ``x_t`` is observed
may depend on the past only. That is the caller's obligation, it cannot be
checked here.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Iterable, Optional, Sequence

import numpy as np


@dataclass
class StreamState:
    """Running ``S(n) = sum eps_t X_t`` and ``N(n) = sum eps_t`` at clock ``t``."""

    t: int = 0
    S: float | np.ndarray = 0.0
    N: int | np.ndarray = 0

    @classmethod
    def zeros(cls, shape) -> "StreamState":
        return cls(0, np.zeros(shape), np.zeros(shape, dtype=np.int64))

    def update(self, observed, x) -> "StreamState":
        """Advance the clock; add ``x`` where ``observed`` is true. Returns ``self``."""
        self.t += 1
        if np.ndim(observed) == 0 and np.ndim(self.S) == 0:
            if observed:
                self.S += x
                self.N += 1
            return self
        obs = np.asarray(observed, dtype=bool)
        self.S = self.S + np.where(obs, x, 0.0)
        self.N = self.N + obs
        return self

    @property
    def mean(self):
        """``S / N``; ``nan`` where nothing was observed yet."""
        if np.ndim(self.N) == 0:
            return self.S / self.N if self.N > 0 else float("nan")
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.N > 0, self.S / np.maximum(self.N, 1), np.nan)


@dataclass
class DiscountedState:
    """Discounted sums anchored at the current time ``n``.

    ``S_g = sum gamma^(n-t) eps_t X_t``, ``N_g = sum gamma^(n-t) eps_t``,
    ``N_g2`` the same with ``gamma^2``, ``M_g = sum gamma^(n-t) eps_t mu_t``
    (needs the true means, so simulations only) and
    ``nu_g = sum gamma^(n-t)``. Every step scales all sums before adding,
    observed or not.
    """

    gamma: float
    n: int = 0
    S_g: float | np.ndarray = 0.0
    N_g: float | np.ndarray = 0.0
    N_g2: float | np.ndarray = 0.0
    M_g: float | np.ndarray = 0.0
    nu_g: float = 0.0

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")

    @classmethod
    def zeros(cls, gamma: float, shape) -> "DiscountedState":
        z = lambda: np.zeros(shape)  # noqa: E731
        return cls(gamma, 0, z(), z(), z(), z(), 0.0)

    def update(self, observed, x, mu_t=0.0) -> "DiscountedState":
        """Scale every sum by its discount, then add the new term. Returns ``self``."""
        g, g2 = self.gamma, self.gamma * self.gamma
        self.n += 1
        self.nu_g = g * self.nu_g + 1.0
        if np.ndim(observed) == 0 and np.ndim(self.S_g) == 0:
            e = 1.0 if observed else 0.0
            self.S_g = g * self.S_g + (e * x if observed else 0.0)
            self.N_g = g * self.N_g + e
            self.N_g2 = g2 * self.N_g2 + e
            self.M_g = g * self.M_g + (e * mu_t if observed else 0.0)
            return self
        obs = np.asarray(observed, dtype=bool)
        e = obs.astype(float)
        self.S_g = g * self.S_g + np.where(obs, x, 0.0)
        self.N_g = g * self.N_g + e
        self.N_g2 = g2 * self.N_g2 + e
        self.M_g = g * self.M_g + np.where(obs, mu_t, 0.0)
        return self

    @property
    def mean(self):
        """Discounted average ``S_g / N_g`` (``nan`` before any observation)."""
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(np.asarray(self.N_g) > 0, np.asarray(self.S_g) / np.asarray(self.N_g), np.nan)
        return float(out) if out.ndim == 0 else out

    @property
    def fluctuation(self):
        """``(S_g - M_g) / sqrt(N_g2)``, the statistic of the discounted bound."""
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(
                np.asarray(self.N_g2) > 0,
                (np.asarray(self.S_g) - np.asarray(self.M_g)) / np.sqrt(np.asarray(self.N_g2)),
                0.0,
            )
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Empirical law of a finite-alphabet sample, kept as exact counts."""

    alphabet: tuple
    counts: tuple

    @property
    def t(self) -> int:
        return sum(self.counts)

    @property
    def probs(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.t

    def exact(self) -> tuple:
        """Frequencies as :class:`fractions.Fraction` (they sum to exactly one)."""
        return tuple(Fraction(c, self.t) for c in self.counts)

    def as_dict(self) -> dict:
        return dict(zip(self.alphabet, self.probs.tolist()))


def multinomial_counts(
    symbols: Iterable[Hashable], alphabet: Optional[Sequence[Hashable]] = None
) -> EmpiricalDistribution:
    """Empirical distribution ``P_t(k) = #{s <= t : X_s = k} / t``.

    ``alphabet`` fixes the symbol order and lets unseen symbols get zero
    mass; without it the sorted observed symbols are used.
    """
    counter = Counter(symbols)
    total = sum(counter.values())
    if total == 0:
        raise ValueError("empirical law of an empty sample is undefined")
    if alphabet is None:
        alphabet = sorted(counter)
    else:
        unknown = set(counter) - set(alphabet)
        if unknown:
            raise ValueError(f"symbols outside the alphabet: {sorted(map(str, unknown))}")
    alphabet = tuple(alphabet)
    return EmpiricalDistribution(alphabet, tuple(counter.get(a, 0) for a in alphabet))
