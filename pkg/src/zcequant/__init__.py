"""Zero-coverage-error Bayesian quantile estimation and exceedance counts.

A quantile estimate built from the Jeffreys-prior predictive of exponential
(or exponential-isomorphic) data is exceeded by future samples at exactly the
nominal rate, at every training size.  This package provides those
estimators, the exact distribution of future exceedance counts with its
moments, a peaks-over-threshold extension for asymptotically Paretian tails,
and a seeded Monte Carlo harness with a CLI front end.
"""

__version__ = "0.1.0"

from .distributions import (
    DistributionSpec,
    RandomStream,
    cdf,
    exponential,
    format_spec,
    gev,
    inverse_survival,
    lognormal,
    make_spec,
    parse_spec,
    quantile,
    rayleigh,
    sample,
    sas,
    std_pareto,
    student_t,
    support,
    survival,
)
from .errors import (
    DataSizeError,
    DegenerateSummaryError,
    ParameterError,
    QuantileBelowThresholdError,
    TieError,
    TruncationError,
    ZcequantError,
)
from .estimators import (
    IDENTITY,
    SQUARE,
    ObservationSummary,
    PsiCoefficient,
    TransformSpec,
    expected_exceedances,
    log_ratio,
    neg_log_survival,
    predictive_cdf_bayes,
    psi_bayes,
    psi_ml,
    quantile_estimate,
    summarize,
    transform_forward,
    transform_inverse,
)
from .exceedance import (
    ExceedancePmf,
    beg_moment,
    beg_pmf,
    beg_variance,
    gvs_pmf,
    tv_distance,
)
from .pot import (
    JEFFREYS,
    PotSeries,
    PriorParams,
    hill_estimate,
    nu_predictive,
    pot_quantile,
    psi_pot_bayes,
    psi_pot_ml,
    select_threshold,
    unconditional_exceedance_pmf,
)
from .sim import (
    DEFAULT_SEED,
    ExperimentConfig,
    ExperimentResult,
    figure_configs,
    load_configs,
    pot_replications,
    run,
    unconditional_counts,
)
