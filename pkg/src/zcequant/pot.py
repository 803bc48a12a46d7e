"""Peaks-over-threshold pipeline for asymptotically Paretian tails.

The threshold is the (n+1)-th largest pooled observation, so the n retained
log-exceedances are exponential under the standard-Pareto tail model.  The
count of future threshold exceedances gets a negative-binomial predictive
from the Poisson rate posterior, and the quantile multiplier is adjusted so
the expected count of quantile exceedances over N future blocks stays at
N(1 - alpha).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import nbinom

from .errors import (
    DataSizeError,
    ParameterError,
    QuantileBelowThresholdError,
    TieError,
    TruncationError,
)
from .estimators import PsiCoefficient, psi_value
from .exceedance import (
    SUM_PATH_WIDTH,
    ExceedancePmf,
    _beg_alternating_sum,
    _beg_quadrature,
    _beg_quadrature_context,
)

__all__ = [
    "PriorParams",
    "JEFFREYS",
    "PotSeries",
    "select_threshold",
    "nu_predictive",
    "psi_pot_bayes",
    "psi_pot_ml",
    "pot_quantile",
    "unconditional_exceedance_pmf",
    "hill_estimate",
]

_TAIL_MASS = 1e-9
_HARD_CAP = 1_000_000


@dataclass(frozen=True)
class PriorParams:
    """Gamma(a, b) prior for the threshold-exceedance rate."""

    a: float = 0.5
    b: float = 0.0

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ParameterError("prior parameters must be nonnegative")


JEFFREYS = PriorParams()


def select_threshold(pooled, n_tail: int) -> tuple[float, np.ndarray]:
    """Threshold u = (n_tail+1)-th largest value and the n_tail strict exceedances.

    Ties at u are excluded; if they eat into the requested count the data is
    rejected rather than silently keeping tied values.
    """
    arr = np.asarray(pooled, dtype=float).ravel()
    if not isinstance(n_tail, (int, np.integer)) or n_tail < 1:
        raise ParameterError(f"n_tail must be a positive integer, got {n_tail!r}")
    if arr.size <= n_tail:
        raise DataSizeError(
            f"need more than n_tail={n_tail} observations, got {arr.size}"
        )
    ordered = np.sort(arr)
    u = float(ordered[-(n_tail + 1)])
    exceedances = ordered[ordered > u][::-1]
    if exceedances.size < n_tail:
        raise TieError(
            f"only {exceedances.size} observations strictly exceed u={u}; "
            f"{n_tail} requested (ties at the threshold)"
        )
    return u, exceedances


def hill_estimate(log_exceedances) -> float:
    """Tail-index estimate: the mean of the log-exceedances."""
    arr = np.asarray(log_exceedances, dtype=float)
    if arr.size == 0:
        raise DataSizeError("no exceedances to estimate from")
    return float(arr.mean())


@dataclass
class PotSeries:
    """Blocked observations reduced to threshold exceedances.

    ``log_exceedances`` holds ln(x_i / u) for the n_tail values strictly above
    the threshold; only the block count and the pooled sample enter the math,
    so unequal block sizes are fine.
    """

    block_sizes: np.ndarray
    n_tail: int
    threshold: float
    log_exceedances: np.ndarray
    blocks: list = field(default_factory=list, repr=False)

    @property
    def n_blocks(self) -> int:
        return int(self.block_sizes.size)

    @property
    def m_bar(self) -> float:
        return float(self.block_sizes.mean())

    @property
    def n(self) -> int:
        return self.n_tail

    def hill_estimate(self) -> float:
        return hill_estimate(self.log_exceedances)

    @classmethod
    def from_blocks(cls, blocks, n_tail: int) -> "PotSeries":
        blocks = [np.asarray(b, dtype=float).ravel() for b in blocks]
        if not blocks:
            raise DataSizeError("no blocks given")
        sizes = np.array([b.size for b in blocks], dtype=int)
        if np.any(sizes == 0):
            raise DataSizeError("every block must contain at least one observation")
        pooled = np.concatenate(blocks)
        u, exceedances = select_threshold(pooled, n_tail)
        if u <= 0:
            raise ParameterError(
                f"threshold u={u} must be positive for the Paretian tail model"
            )
        return cls(
            block_sizes=sizes,
            n_tail=int(n_tail),
            threshold=u,
            log_exceedances=np.log(exceedances / u),
            blocks=blocks,
        )

    @classmethod
    def from_csv(cls, path, n_tail: int) -> "PotSeries":
        """Read (block_id, value) rows; blocks follow first appearance order."""
        order: list = []
        grouped: dict = {}
        with open(path, newline="") as fh:
            for row_num, row in enumerate(csv.reader(fh), start=1):
                if not row or not "".join(row).strip():
                    continue
                if len(row) < 2:
                    raise ParameterError(f"{path}: line {row_num}: expected block_id,value")
                block_id, text = row[0].strip(), row[1].strip()
                try:
                    value = float(text)
                except ValueError:
                    if row_num == 1:  # header line
                        continue
                    raise ParameterError(
                        f"{path}: line {row_num}: bad numeric value {text!r}"
                    ) from None
                if block_id not in grouped:
                    grouped[block_id] = []
                    order.append(block_id)
                grouped[block_id].append(value)
        if not order:
            raise DataSizeError(f"{path}: no data rows")
        return cls.from_blocks([grouped[b] for b in order], n_tail)


def nu_predictive(
    n: int, n_tilde: int, N: int, prior: PriorParams = JEFFREYS
) -> ExceedancePmf:
    """Negative-binomial predictive for the future threshold-exceedance count.

    With n exceedances over n_tilde blocks and a Gamma(a, b) prior the count
    over N new blocks is NB(n + a, (n_tilde + b) / (n_tilde + N + b)); the
    Jeffreys default gives mean (n / n_tilde) N (1 + 1/(2n)).  The pmf is
    truncated once the cumulative mass reaches 1 - 1e-9 and renormalized.
    """
    n = _check_pos_int(n, "n")
    n_tilde = _check_pos_int(n_tilde, "n_tilde")
    N = _check_pos_int(N, "N")
    r = n + prior.a
    p = (n_tilde + prior.b) / (n_tilde + N + prior.b)
    cap = int(nbinom.ppf(1.0 - _TAIL_MASS, r, p))
    while nbinom.sf(cap, r, p) > _TAIL_MASS:
        cap = 2 * cap + 10
        if cap > _HARD_CAP:
            raise TruncationError(
                f"negative-binomial tail still above {_TAIL_MASS} at {_HARD_CAP} terms"
            )
    probs = nbinom.pmf(np.arange(cap + 1), r, p)
    probs = probs / probs.sum()
    params = {
        "family": "nb_predictive",
        "n": n,
        "n_tilde": n_tilde,
        "N": N,
        "a": prior.a,
        "b": prior.b,
    }
    return ExceedancePmf(probs, params)


def _check_pos_int(value, name) -> int:
    if not isinstance(value, (int, np.integer)) or value < 1:
        raise ParameterError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def _check_alpha(alpha) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie strictly inside (0, 1), got {alpha}")
    return alpha


def psi_pot_bayes(n: int, n_tilde: int, alpha: float) -> PsiCoefficient:
    """Multiplier ((n/n_tilde)(1 + 1/(2n)) / (1-alpha))^(1/n) - 1.

    Built so that the expected count of quantile exceedances over N future
    blocks, marginalized over the threshold-count predictive, is N(1-alpha).
    """
    n = _check_pos_int(n, "n")
    n_tilde = _check_pos_int(n_tilde, "n_tilde")
    alpha = _check_alpha(alpha)
    ratio = (n / n_tilde) * (1.0 + 1.0 / (2.0 * n))
    if ratio <= 1.0 - alpha:
        raise QuantileBelowThresholdError(
            f"annual quantile alpha={alpha} sits below the threshold percentile "
            f"(per-block exceedance rate {ratio:.6g} <= 1-alpha); use a smaller n_tail"
        )
    value = math.expm1((math.log(ratio) - math.log1p(-alpha)) / n)
    return PsiCoefficient(value, "pot_bayes", alpha, n, n_tilde)


def psi_pot_ml(n: int, n_tilde: int, N: int, alpha: float) -> PsiCoefficient:
    """Plug-in multiplier ((n/n_tilde) N / (1-alpha))^(1/n) - 1.

    Note the N in the numerator: this targets the per-threshold-exceedance
    quantile over all N blocks, a different normalization from the Bayes
    version (kept exactly as defined, for comparison runs).
    """
    n = _check_pos_int(n, "n")
    n_tilde = _check_pos_int(n_tilde, "n_tilde")
    N = _check_pos_int(N, "N")
    alpha = _check_alpha(alpha)
    ratio = (n / n_tilde) * N
    if ratio <= 1.0 - alpha:
        raise QuantileBelowThresholdError(
            f"alpha={alpha} is unreachable with per-block rate times N = {ratio:.6g}; "
            "use a smaller n_tail"
        )
    value = math.expm1((math.log(ratio) - math.log1p(-alpha)) / n)
    return PsiCoefficient(value, "pot_ml", alpha, n, n_tilde)


def pot_quantile(series: PotSeries, psi) -> float:
    """Quantile estimate u * exp(psi * sum of log-exceedances); always >= u."""
    value = psi_value(psi)
    return float(series.threshold * math.exp(value * series.log_exceedances.sum()))


def unconditional_exceedance_pmf(
    n: int, n_tilde: int, N: int, alpha: float, psi=None
) -> ExceedancePmf:
    """Exceedance-count pmf marginalized over the threshold-count predictive.

    P(K = k) = sum_{Nu >= k} BEG(k; n, Nu, psi) NB(Nu; n + 1/2, nt/(nt + N)).
    With the default psi (psi_pot_bayes) the mean is N(1 - alpha).
    """
    n = _check_pos_int(n, "n")
    n_tilde = _check_pos_int(n_tilde, "n_tilde")
    N = _check_pos_int(N, "N")
    alpha = _check_alpha(alpha)
    if psi is None:
        psi = psi_pot_bayes(n, n_tilde, alpha)
    value = psi_value(psi)
    weights = nu_predictive(n, n_tilde, N).probabilities
    cap = weights.size - 1
    out = np.zeros(cap + 1)
    out[0] += weights[0]
    # nodes and gamma density depend only on (n, psi): share them across Nu
    context = _beg_quadrature_context(n, value)
    for nu_count in range(1, cap + 1):
        ks = np.arange(nu_count + 1)
        cut = max(0, nu_count - SUM_PATH_WIDTH)
        pmf = np.empty(nu_count + 1)
        if cut > 0:
            pmf[:cut] = _beg_quadrature(n, nu_count, value, ks[:cut], context=context)
        vals, bad = _beg_alternating_sum(n, nu_count, value, ks[cut:])
        if bad.any():
            vals[bad] = _beg_quadrature(
                n, nu_count, value, ks[cut:][bad], context=context
            )
        pmf[cut:] = vals
        out[: nu_count + 1] += weights[nu_count] * pmf
    params = {
        "family": "pot_unconditional",
        "n": n,
        "n_tilde": n_tilde,
        "N": N,
        "alpha": alpha,
        "psi": value,
    }
    return ExceedancePmf(out, params)
