"""Informational (KL-type) deviation bounds for self-normalized averages."""

__version__ = "0.1.0"

from .confidence_sets import (  # noqa: E402
    ConfidenceSet,
    SimplexRegion,
    exp_family_region,
    interval,
    interval_with_certificate,
    kl_divergence,
    lower_conf,
    upper_conf,
)
from .estimators import DiscountedState, StreamState, multinomial_counts  # noqa: E402
from .peeling_bounds import BoundKind, BoundQuery, BoundValue, calibrate_delta, evaluate  # noqa: E402
from .rate_functions import (  # noqa: E402
    Bernoulli,
    BoundedKL,
    Exponential,
    ExplicitPhi,
    GammaFixedShape,
    Poisson,
    Quadratic,
    bregman_kl,
    kl,
    lambda_of_x,
    rate,
)

__all__ = [
    "Bernoulli",
    "BoundKind",
    "BoundQuery",
    "BoundValue",
    "BoundedKL",
    "ConfidenceSet",
    "DiscountedState",
    "ExplicitPhi",
    "Exponential",
    "GammaFixedShape",
    "Poisson",
    "Quadratic",
    "SimplexRegion",
    "StreamState",
    "bregman_kl",
    "calibrate_delta",
    "evaluate",
    "exp_family_region",
    "interval",
    "interval_with_certificate",
    "kl",
    "kl_divergence",
    "lambda_of_x",
    "lower_conf",
    "multinomial_counts",
    "rate",
    "upper_conf",
]
