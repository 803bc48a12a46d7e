"""Monte Carlo harness for coverage curves, exceedance histograms, and sweeps.

Replications run in fixed-size batches on split random streams, so results
are bit-reproducible for a given seed and safe to parallelize by cell.  Test
samples never need to be materialized: conditioned on the fitted quantile the
exceedance count is exactly binomial (or multinomial across quantile bands),
so the engines draw the count directly from that law.
"""

from __future__ import annotations

import configparser
import csv
import json
import math
import os
import subprocess
from dataclasses import dataclass, field, fields

import numpy as np

from . import distributions as dist
from .distributions import DistributionSpec, RandomStream, format_spec, parse_spec
from .errors import ParameterError
from .estimators import expected_exceedances, psi_bayes, psi_ml
from .exceedance import beg_pmf, gvs_pmf, tv_distance
from .pot import hill_estimate, psi_pot_bayes, psi_pot_ml

__all__ = [
    "DEFAULT_SEED",
    "ExperimentConfig",
    "ExperimentResult",
    "unconditional_counts",
    "pot_replications",
    "run",
    "run_coverage_vs_n",
    "run_beg_comparison",
    "run_interval_sweep",
    "run_sas_sweep",
    "run_distribution_table",
    "load_configs",
    "figure_configs",
    "FIGURE_IDS",
]

DEFAULT_SEED = 20260810
_BATCH = 1000  # fixed batch size keeps seeded runs bit-identical

_TABLE1_DISTRIBUTIONS = (
    "exp(rate=1)",
    "lognormal(mu=0,sigma=1)",
    "stdpar(xi=0.1,u=1)",
    "gev(xi=0.5,beta=1,mu=0)",
    "t(nu=2)",
    "t(nu=10)",
)


@dataclass
class ExperimentConfig:
    """Declarative description of one Monte Carlo experiment."""

    kind: str
    seed: int = DEFAULT_SEED
    replications: int = 10_000
    alpha: float = 0.99
    alphas: tuple = ()
    n_grid: tuple = (10, 25, 50, 100, 250, 500)
    n_train: int = 50
    N: int = 0  # 0 means round(1/(1-alpha)) for coverage runs
    n_tilde: int = 50
    m_bar: int = 100
    n_tail: int = 50
    n_tail_grid: tuple = (5, 10, 25, 50)
    alpha_s_grid: tuple = (1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9, 2.0)
    estimators: tuple = ("bayes", "ml")
    mode: str = "pot"  # beg comparison: 'pot' or 'unconditional'
    data: str = "stdpar(xi=0.3,u=1)"
    distributions: tuple = _TABLE1_DISTRIBUTIONS
    gvs_m: int = 0  # nonzero adds the order-statistic comparison law
    rate_prior: str = "fixed:1"

    def __post_init__(self):
        if self.replications < 1:
            raise ParameterError("replications must be >= 1")
        for a in (self.alpha, *self.alphas):
            if not 0.0 < a < 1.0:
                raise ParameterError(f"alpha grid values must be in (0,1), got {a}")

    def data_spec(self) -> DistributionSpec:
        return parse_spec(self.data)


@dataclass
class ExperimentResult:
    """Tidy per-cell rows plus run metadata and summary statistics."""

    kind: str
    meta: dict
    cells: list
    summary: dict = field(default_factory=dict)

    def write_csv(self, path) -> None:
        if not self.cells:
            raise ParameterError("no cells to write")
        columns = list(self.cells[0].keys())
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for cell in self.cells:
                writer.writerow([_csv_value(cell.get(c)) for c in columns])

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump({"meta": self.meta, "summary": self.summary}, fh, indent=2)
            fh.write("\n")


def _csv_value(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return value


def _git_describe():
    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=10,
            cwd=here,
        )
    except OSError:
        return None
    return out.stdout.strip() if out.returncode == 0 else None


def _meta(config: ExperimentConfig) -> dict:
    from . import __version__

    return {
        "kind": config.kind,
        "seed": config.seed,
        "replications": config.replications,
        "version": __version__,
        "git_describe": _git_describe(),
    }


def _std1(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(values.std(ddof=1)) if values.size > 1 else 0.0


def _mean_se(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    se = _std1(values) / math.sqrt(values.size)
    return float(values.mean()), float(se)


def _sd_se(values) -> tuple[float, float]:
    """Sample sd and its standard error from the fourth central moment."""
    values = np.asarray(values, dtype=float)
    sd = _std1(values)
    if values.size < 2 or sd == 0.0:
        return sd, 0.0
    centered = values - values.mean()
    m4 = float(np.mean(centered**4))
    var_of_var = max(m4 - sd**4, 0.0) / values.size
    return sd, float(math.sqrt(var_of_var) / (2.0 * sd))


def _prob_gt(values, k=1) -> tuple[float, float]:
    values = np.asarray(values)
    p = float((values > k).mean())
    return p, float(math.sqrt(p * (1.0 - p) / values.size))


# ---------------------------------------------------------------------------
# replication engines


def _rate_sampler(text: str):
    """Parse 'fixed:x' | 'gamma:shape,rate' | 'loguniform:lo,hi' into a sampler."""
    name, _, args = text.partition(":")
    parts = [float(v) for v in args.split(",")] if args else []
    if name == "fixed":
        value = parts[0] if parts else 1.0
        if value <= 0:
            raise ParameterError("fixed rate must be > 0")
        return lambda gen, size: np.full(size, value)
    if name == "gamma":
        if len(parts) != 2 or min(parts) <= 0:
            raise ParameterError("gamma prior needs shape,rate > 0")
        shape, rate = parts
        return lambda gen, size: gen.gamma(shape, 1.0 / rate, size)
    if name == "loguniform":
        if len(parts) != 2 or parts[0] <= 0 or parts[1] <= parts[0]:
            raise ParameterError("loguniform prior needs 0 < lo < hi")
        lo, hi = math.log(parts[0]), math.log(parts[1])
        return lambda gen, size: np.exp(gen.uniform(lo, hi, size))
    raise ParameterError(f"unknown rate prior {text!r}")


def unconditional_counts(
    n: int,
    N: int,
    psi_values,
    replications: int,
    stream: RandomStream,
    rate_prior: str = "fixed:1",
) -> np.ndarray:
    """Exceedance counts for exponential training data, one row per multiplier.

    Per replication the training sum is Gamma(n, 1/lambda) (the exact law of
    a summed exponential sample) and the count of N test samples above
    psi * Sigma is Binomial(N, exp(-lambda psi Sigma)), drawn directly.
    A shared Sigma serves every multiplier so estimators see the same data.
    """
    psi_values = np.atleast_1d(np.asarray(psi_values, dtype=float))
    rate = _rate_sampler(rate_prior)
    gen = stream.generator
    counts = np.empty((psi_values.size, replications), dtype=np.int64)
    for start in range(0, replications, _BATCH):
        stop = min(start + _BATCH, replications)
        lam = rate(gen, stop - start)
        sigma = gen.gamma(n, 1.0 / lam)
        for row, psi in enumerate(psi_values):
            counts[row, start:stop] = gen.binomial(N, np.exp(-lam * psi * sigma))
    return counts


def pot_replications(
    spec: DistributionSpec,
    n_tilde: int,
    m_bar: int,
    n_tail: int,
    N: int,
    psi,
    replications: int,
    stream: RandomStream,
) -> dict:
    """Peaks-over-threshold replications: counts, tail-index and quantile draws.

    Each replication draws n_tilde * m_bar training values, takes the top
    n_tail above the (n_tail+1)-th largest, and counts test exceedances of
    the fitted quantile over N blocks of m_bar as Binomial(N m_bar, sf(eta)).
    """
    from .estimators import psi_value

    value = psi_value(psi)
    train_size = n_tilde * m_bar
    test_size = N * m_bar
    gen = stream.generator
    counts = np.empty(replications, dtype=np.int64)
    xi_hat = np.empty(replications)
    eta = np.empty(replications)
    for start in range(0, replications, _BATCH):
        stop = min(start + _BATCH, replications)
        rows = stop - start
        data = dist.sample(spec, rows * train_size, stream).reshape(rows, train_size)
        part = np.partition(data, train_size - n_tail - 1, axis=1)
        thr = part[:, train_size - n_tail - 1]
        top = part[:, train_size - n_tail :]
        if thr.min() <= 0:
            raise ParameterError(
                "nonpositive threshold: the sample has too few positive values "
                "for the Paretian tail model (raise m_bar or lower n_tail)"
            )
        log_exc = np.log(top / thr[:, None])
        xi_hat[start:stop] = log_exc.mean(axis=1)
        eta[start:stop] = thr * np.exp(value * log_exc.sum(axis=1))
        tail_prob = np.clip(dist.survival(spec, eta[start:stop]), 0.0, 1.0)
        counts[start:stop] = gen.binomial(test_size, tail_prob)
    return {"counts": counts, "xi_hat": xi_hat, "eta": eta}


# ---------------------------------------------------------------------------
# experiment runners


def run(config: ExperimentConfig) -> ExperimentResult:
    runner = _RUNNERS.get(config.kind)
    if runner is None:
        raise ParameterError(
            f"unknown experiment kind {config.kind!r}; expected one of {sorted(_RUNNERS)}"
        )
    return runner(config)


def _psi_for(estimator: str, n: int, alpha: float):
    if estimator == "bayes":
        return psi_bayes(n, alpha)
    if estimator == "ml":
        return psi_ml(n, alpha)
    raise ParameterError(f"unknown estimator {estimator!r}")


def _psi_for_pot(estimator: str, n_tail: int, n_tilde: int, N: int, alpha: float):
    if estimator == "bayes":
        return psi_pot_bayes(n_tail, n_tilde, alpha)
    if estimator == "ml":
        return psi_pot_ml(n_tail, n_tilde, N, alpha)
    raise ParameterError(f"unknown estimator {estimator!r}")


def run_coverage_vs_n(config: ExperimentConfig) -> ExperimentResult:
    """Mean exceedance count against training size, with the analytic curve."""
    root = RandomStream(config.seed)
    alphas = config.alphas or (config.alpha,)
    cells = []
    index = 0
    for alpha in alphas:
        N = config.N or round(1.0 / (1.0 - alpha))
        for n in config.n_grid:
            psis = [_psi_for(est, n, alpha) for est in config.estimators]
            counts = unconditional_counts(
                n,
                N,
                [p.value for p in psis],
                config.replications,
                root.split(index),
                config.rate_prior,
            )
            index += 1
            for psi, row in zip(psis, counts):
                mean, se = _mean_se(row)
                cells.append(
                    {
                        "alpha": alpha,
                        "n": n,
                        "N": N,
                        "estimator": psi.method,
                        "mean_exceedances": mean,
                        "se_mean": se,
                        "sd_exceedances": _std1(row),
                        "analytic_mean": expected_exceedances(psi, n, N),
                    }
                )
    return ExperimentResult("coverage_vs_n", _meta(config), cells)


def run_interval_sweep(config: ExperimentConfig) -> ExperimentResult:
    """Exceedance counts across a quantile grid, normalized by N(1 - alpha)."""
    root = RandomStream(config.seed)
    alphas = config.alphas or (0.90, 0.91, 0.92, 0.93, 0.94, 0.95, 0.96, 0.97, 0.98, 0.99)
    N = config.N or 100
    n = config.n_train
    cells = []
    for index, alpha in enumerate(alphas):
        psis = [_psi_for(est, n, alpha) for est in config.estimators]
        counts = unconditional_counts(
            n,
            N,
            [p.value for p in psis],
            config.replications,
            root.split(index),
            config.rate_prior,
        )
        expected = N * (1.0 - alpha)
        for psi, row in zip(psis, counts):
            mean, se = _mean_se(row)
            cells.append(
                {
                    "alpha": alpha,
                    "n": n,
                    "N": N,
                    "estimator": psi.method,
                    "mean_exceedances": mean,
                    "se_mean": se,
                    "normalized_mean": mean / expected,
                    "se_normalized": se / expected,
                    "analytic_normalized": expected_exceedances(psi, n, N) / expected,
                }
            )
    return ExperimentResult("interval_sweep", _meta(config), cells)


def run_beg_comparison(config: ExperimentConfig) -> ExperimentResult:
    """Empirical exceedance histogram against the closed-form pmf."""
    root = RandomStream(config.seed)
    R = config.replications
    cells = []
    summary = {}
    N = config.N or 100
    for index, estimator in enumerate(config.estimators):
        stream = root.split(index)
        if config.mode == "pot":
            psi = _psi_for_pot(estimator, config.n_tail, config.n_tilde, N, config.alpha)
            reps = pot_replications(
                config.data_spec(),
                config.n_tilde,
                config.m_bar,
                config.n_tail,
                N,
                psi,
                R,
                stream,
            )
            counts = reps["counts"]
            theory = beg_pmf(config.n_tail, N, psi)
            xi_mean, xi_se = _mean_se(reps["xi_hat"])
            extra = {"xi_mean": xi_mean, "xi_se": xi_se}
        elif config.mode == "unconditional":
            psi = _psi_for(estimator, config.n_train, config.alpha)
            counts = unconditional_counts(
                config.n_train, N, psi.value, R, stream, config.rate_prior
            )[0]
            theory = beg_pmf(config.n_train, N, psi)
            extra = {}
        else:
            raise ParameterError(f"unknown mode {config.mode!r}")
        hist = np.bincount(counts, minlength=N + 1) / R
        for k in range(N + 1):
            cells.append(
                {
                    "estimator": estimator,
                    "k": k,
                    "empirical_frequency": float(hist[k]),
                    "theoretical_probability": float(theory.probabilities[k]),
                }
            )
        mean, se = _mean_se(counts)
        p_gt1, p_se = _prob_gt(counts)
        summary[estimator] = {
            "mean": mean,
            "se_mean": se,
            "sd": _std1(counts),
            "p_gt_1": p_gt1,
            "se_p_gt_1": p_se,
            "tv_distance": tv_distance(hist, theory.probabilities),
            "theory_mean": theory.mean(),
            **extra,
        }
    if config.gvs_m:
        theory = gvs_pmf(config.n_train, config.gvs_m, N)
        for k in range(N + 1):
            cells.append(
                {
                    "estimator": "gvs",
                    "k": k,
                    "empirical_frequency": None,
                    "theoretical_probability": float(theory.probabilities[k]),
                }
            )
        summary["gvs"] = {"theory_mean": theory.mean(), "theory_variance": theory.variance()}
    return ExperimentResult("beg_comparison", _meta(config), cells, summary)


def run_sas_sweep(config: ExperimentConfig) -> ExperimentResult:
    """Mean and spread of the exceedance count over the stable-exponent grid."""
    root = RandomStream(config.seed)
    N = config.N or 100
    cells = []
    index = 0
    for alpha_s in config.alpha_s_grid:
        spec = dist.sas(alpha_s)
        for n_tail in config.n_tail_grid:
            psi = psi_pot_bayes(n_tail, config.n_tilde, config.alpha)
            reps = pot_replications(
                spec,
                config.n_tilde,
                config.m_bar,
                n_tail,
                N,
                psi,
                config.replications,
                root.split(index),
            )
            index += 1
            counts = reps["counts"]
            mean, se = _mean_se(counts)
            sd, sd_se = _sd_se(counts)
            p_gt1, p_se = _prob_gt(counts)
            cells.append(
                {
                    "alpha_s": alpha_s,
                    "n_tail": n_tail,
                    "mean_exceedances": mean,
                    "se_mean": se,
                    "sd_exceedances": sd,
                    "se_sd": sd_se,
                    "p_gt_1": p_gt1,
                    "se_p_gt_1": p_se,
                }
            )
    return ExperimentResult("sas_sweep", _meta(config), cells)


def run_distribution_table(config: ExperimentConfig) -> ExperimentResult:
    """Tail-index and exceedance statistics per distribution and tail size."""
    root = RandomStream(config.seed)
    N = config.N or 100
    cells = []
    index = 0
    for text in config.distributions:
        spec = parse_spec(text) if isinstance(text, str) else text
        for n_tail in config.n_tail_grid:
            psi = psi_pot_bayes(n_tail, config.n_tilde, config.alpha)
            reps = pot_replications(
                spec,
                config.n_tilde,
                config.m_bar,
                n_tail,
                N,
                psi,
                config.replications,
                root.split(index),
            )
            index += 1
            counts = reps["counts"]
            xi = reps["xi_hat"]
            mean, se = _mean_se(counts)
            sd, sd_se = _sd_se(counts)
            p_gt1, p_se = _prob_gt(counts)
            xi_mean, xi_se = _mean_se(xi)
            cells.append(
                {
                    "distribution": format_spec(spec),
                    "n_tail": n_tail,
                    "mu_xi": xi_mean,
                    "se_mu_xi": xi_se,
                    "sd_xi": _std1(xi),
                    "mu_N": mean,
                    "se_mu_N": se,
                    "sd_N": sd,
                    "se_sd_N": sd_se,
                    "p_gt_1": p_gt1,
                    "se_p_gt_1": p_se,
                }
            )
    return ExperimentResult("distribution_table", _meta(config), cells)


_RUNNERS = {
    "coverage_vs_n": run_coverage_vs_n,
    "interval_sweep": run_interval_sweep,
    "beg_comparison": run_beg_comparison,
    "sas_sweep": run_sas_sweep,
    "distribution_table": run_distribution_table,
}


# ---------------------------------------------------------------------------
# config files and figure presets

_INT_KEYS = {"seed", "replications", "n_train", "N", "n_tilde", "m_bar", "n_tail", "gvs_m"}
_FLOAT_KEYS = {"alpha"}
_INT_TUPLE_KEYS = {"n_grid", "n_tail_grid"}
_FLOAT_TUPLE_KEYS = {"alphas", "alpha_s_grid"}
_STR_TUPLE_KEYS = {"estimators", "distributions"}


def _parse_config_value(key: str, raw: str):
    raw = raw.strip()
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _INT_TUPLE_KEYS:
        return tuple(int(v) for v in raw.split(","))
    if key in _FLOAT_TUPLE_KEYS:
        return tuple(float(v) for v in raw.split(","))
    if key in _STR_TUPLE_KEYS:
        if key == "distributions":
            return tuple(v.strip() for v in raw.split(";"))
        return tuple(v.strip() for v in raw.split(","))
    return raw


def load_configs(path) -> list[tuple[str, ExperimentConfig]]:
    """Read key = value sections, one experiment per section.

    Distribution lists use ';' separators because specs contain commas.
    """
    parser = configparser.ConfigParser()
    parser.optionxform = str  # option names are case sensitive (N vs n)
    if not parser.read(path):
        raise ParameterError(f"cannot read config file {path}")
    known = {f.name for f in fields(ExperimentConfig)}
    out = []
    for section in parser.sections():
        kwargs = {}
        for key, raw in parser.items(section):
            if key not in known:
                raise ParameterError(f"[{section}] unknown option {key!r}")
            kwargs[key] = _parse_config_value(key, raw)
        if "kind" not in kwargs:
            raise ParameterError(f"[{section}] missing 'kind'")
        out.append((section, ExperimentConfig(**kwargs)))
    return out


FIGURE_IDS = ("1", "2", "4", "5", "6", "table1")


def figure_configs(
    figure: str, quick: bool = False, seed: int = DEFAULT_SEED
) -> list[tuple[str, ExperimentConfig]]:
    """Preset experiment configs reproducing the published figures and table."""
    R = 1_000 if quick else 10_000
    if figure == "1":
        return [
            (
                "fig1",
                ExperimentConfig(
                    kind="coverage_vs_n",
                    seed=seed,
                    replications=R,
                    alphas=(0.99, 0.999, 0.9999),
                    n_grid=(10, 25, 50, 100, 250, 500),
                    N=0,
                ),
            )
        ]
    if figure == "2":
        base = dict(
            kind="beg_comparison",
            seed=seed,
            replications=R,
            mode="unconditional",
            alpha=0.99,
            N=100,
        )
        return [
            ("fig2_left", ExperimentConfig(n_train=50, **base)),
            ("fig2_right", ExperimentConfig(n_train=100, gvs_m=1, **base)),
        ]
    if figure == "4":
        return [
            (
                "fig4",
                ExperimentConfig(
                    kind="beg_comparison",
                    seed=seed,
                    replications=R,
                    mode="pot",
                    data="stdpar(xi=0.3,u=1)",
                    estimators=("bayes",),
                    n_tilde=50,
                    m_bar=100,
                    n_tail=50,
                    N=100,
                    alpha=0.99,
                ),
            )
        ]
    if figure == "5":
        base = dict(kind="interval_sweep", seed=seed, replications=R, n_train=50)
        left = ExperimentConfig(
            alphas=tuple(round(0.90 + 0.01 * i, 2) for i in range(10)), N=100, **base
        )
        right = ExperimentConfig(
            alphas=tuple(round(0.990 + 0.001 * i, 3) for i in range(10)), N=1000, **base
        )
        return [("fig5_left", left), ("fig5_right", right)]
    if figure == "6":
        return [
            (
                "fig6",
                ExperimentConfig(
                    kind="sas_sweep",
                    seed=seed,
                    replications=R,
                    n_tilde=50,
                    m_bar=100,
                    N=100,
                    alpha=0.99,
                ),
            )
        ]
    if figure == "table1":
        return [
            (
                "table1",
                ExperimentConfig(
                    kind="distribution_table",
                    seed=seed,
                    replications=R,
                    n_tilde=50,
                    m_bar=100,
                    N=100,
                    alpha=0.99,
                ),
            )
        ]
    raise ParameterError(f"unknown figure {figure!r}; valid ids: {', '.join(FIGURE_IDS)}")
