"""Quantile estimation for exponential data and exponential-isomorphic laws.

Both the maximum-likelihood and the Bayesian (Jeffreys-prior) quantile
estimates take the form ``h_inverse(psi * sum(h(z_i)))`` for a monotone
transform ``h`` that maps the data to exponential variates.  The Bayesian
multiplier is the one with zero coverage error: a future draw exceeds the
estimate with probability exactly ``1 - alpha`` at every sample size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import distributions as dist
from .errors import DegenerateSummaryError, ParameterError

__all__ = [
    "ObservationSummary",
    "PsiCoefficient",
    "TransformSpec",
    "IDENTITY",
    "SQUARE",
    "log_ratio",
    "neg_log_survival",
    "psi_ml",
    "psi_bayes",
    "psi_value",
    "summarize",
    "quantile_estimate",
    "predictive_cdf_bayes",
    "expected_exceedances",
    "transform_forward",
    "transform_inverse",
]


@dataclass(frozen=True)
class ObservationSummary:
    """Sufficient statistics of a training sample: count and transformed sum."""

    n: int
    sigma: float

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n!r}")
        if not math.isfinite(self.sigma) or self.sigma < 0:
            raise ParameterError(f"sigma must be finite and >= 0, got {self.sigma!r}")


@dataclass(frozen=True)
class PsiCoefficient:
    """Quantile multiplier: the estimate is h_inverse(value * sigma)."""

    value: float
    method: str
    alpha: float
    n: int
    n_tilde: int | None = None

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value < 0:
            raise ParameterError(f"psi must be finite and >= 0, got {self.value!r}")


@dataclass(frozen=True)
class TransformSpec:
    """Monotone map h with h(support lower endpoint) = 0.

    kinds: ``identity`` for exponential data, ``square`` for Rayleigh,
    ``log_ratio`` (with threshold u) for the standard Pareto, and
    ``neg_log_survival`` for any base cdf with known parameters.
    """

    kind: str
    u: float | None = None
    base: dist.DistributionSpec | None = None


IDENTITY = TransformSpec("identity")
SQUARE = TransformSpec("square")


def log_ratio(u: float) -> TransformSpec:
    if not u > 0:
        raise ParameterError(f"log_ratio threshold must be > 0, got {u!r}")
    return TransformSpec("log_ratio", u=float(u))


def neg_log_survival(base: dist.DistributionSpec) -> TransformSpec:
    return TransformSpec("neg_log_survival", base=base)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie strictly inside (0, 1), got {alpha}")
    return alpha


def _check_n(n, name="n") -> int:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ParameterError(f"{name} must be a positive integer, got {n!r}")
    return int(n)


def psi_ml(n: int, alpha: float) -> PsiCoefficient:
    """Maximum-likelihood multiplier -log(1 - alpha) / n."""
    n = _check_n(n)
    alpha = _check_alpha(alpha)
    return PsiCoefficient(-math.log1p(-alpha) / n, "ml", alpha, n)


def psi_bayes(n: int, alpha: float) -> PsiCoefficient:
    """Jeffreys-posterior multiplier (1 - alpha)^(-1/n) - 1.

    Evaluated as expm1(-log1p(-alpha)/n), which survives alpha near 1 with
    large n where the naive power underflows.
    """
    n = _check_n(n)
    alpha = _check_alpha(alpha)
    return PsiCoefficient(math.expm1(-math.log1p(-alpha) / n), "bayes", alpha, n)


def psi_value(psi) -> float:
    """Accept a PsiCoefficient or a bare nonnegative float."""
    value = float(getattr(psi, "value", psi))
    if not math.isfinite(value) or value < 0:
        raise ParameterError(f"psi must be finite and >= 0, got {value!r}")
    return value


def transform_forward(transform: TransformSpec, z):
    """h(z); raises on values below the support lower endpoint."""
    arr = np.asarray(z, dtype=float)
    scalar = arr.ndim == 0
    if transform.kind == "identity":
        if np.any(arr < 0):
            raise ParameterError("identity transform expects nonnegative data")
        out = arr.copy()
    elif transform.kind == "square":
        if np.any(arr < 0):
            raise ParameterError("square transform expects nonnegative data")
        out = arr * arr
    elif transform.kind == "log_ratio":
        if np.any(arr < transform.u):
            raise ParameterError(f"log_ratio transform expects data >= u = {transform.u}")
        out = np.log(arr / transform.u)
    elif transform.kind == "neg_log_survival":
        lo, _ = dist.support(transform.base)
        if np.any(arr < lo):
            raise ParameterError(f"data below support lower endpoint {lo}")
        out = -np.log(dist.survival(transform.base, arr))
    else:
        raise ParameterError(f"unknown transform kind {transform.kind!r}")
    return float(out) if scalar else out


def transform_inverse(transform: TransformSpec, x):
    """h^{-1}(x) for x >= 0; inverse(forward(z)) = z on the support."""
    scalar = np.ndim(x) == 0
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(arr < 0):
        raise ParameterError("transformed values are nonnegative")
    if transform.kind == "identity":
        out = arr.copy()
    elif transform.kind == "square":
        out = np.sqrt(arr)
    elif transform.kind == "log_ratio":
        out = transform.u * np.exp(arr)
    elif transform.kind == "neg_log_survival":
        # split at the median: the cdf branch keeps precision for small x,
        # the survival branch for large x
        out = np.empty_like(arr)
        low = arr <= math.log(2.0)
        if low.any():
            out[low] = dist.quantile(transform.base, -np.expm1(-arr[low]))
        if (~low).any():
            out[~low] = dist.inverse_survival(transform.base, np.exp(-arr[~low]))
    else:
        raise ParameterError(f"unknown transform kind {transform.kind!r}")
    return float(out[0]) if scalar else out


def summarize(data, transform: TransformSpec = IDENTITY) -> ObservationSummary:
    arr = np.asarray(data, dtype=float).ravel()
    if arr.size == 0:
        raise ParameterError("cannot summarize an empty sample")
    return ObservationSummary(int(arr.size), float(np.sum(transform_forward(transform, arr))))


def quantile_estimate(
    summary: ObservationSummary, psi, transform: TransformSpec = IDENTITY
) -> float:
    """h_inverse(psi * sigma); with the identity transform simply psi * sigma."""
    value = psi_value(psi)
    if transform.kind == "identity" and summary.sigma == 0.0:
        raise DegenerateSummaryError(
            "sigma = 0 cannot arise from continuous data; check the input"
        )
    return float(transform_inverse(transform, value * summary.sigma))


def predictive_cdf_bayes(y: float, summary: ObservationSummary) -> float:
    """Posterior-predictive cdf 1 - (1 + y/sigma)^(-n), a Lomax law.

    Inverting at level alpha reproduces ``quantile_estimate`` with
    ``psi_bayes``.
    """
    y = float(y)
    if y < 0:
        raise ParameterError(f"y must be >= 0, got {y}")
    if summary.sigma == 0.0:
        raise DegenerateSummaryError("sigma = 0 gives a degenerate predictive")
    return -math.expm1(-summary.n * math.log1p(y / summary.sigma))


def expected_exceedances(psi, n: int, N: int) -> float:
    """Expected count of future exceedances, N / (psi + 1)^n.

    With the Bayes multiplier this equals N(1 - alpha) exactly, for every n;
    that identity is the zero-coverage-error property.
    """
    n = _check_n(n)
    N = _check_n(N, "N")
    return N * math.exp(-n * math.log1p(psi_value(psi)))
