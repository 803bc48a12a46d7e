"""Command-line front end: estimate, exceedance, pot, simulate, reproduce.

Each subcommand is a thin shim over the library; numeric output is printed
with 9 significant digits, CSV files carry full double precision.  Errors go
to stderr with a nonzero exit code.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import estimators, exceedance, pot, sim
from .errors import ZcequantError

_ENV_SEED = "ZCEQUANT_SEED"


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def _default_seed() -> int:
    return int(os.environ.get(_ENV_SEED, sim.DEFAULT_SEED))


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _parse_transform(text: str) -> estimators.TransformSpec:
    if text == "identity":
        return estimators.IDENTITY
    if text == "square":
        return estimators.SQUARE
    if text.startswith("logratio:"):
        return estimators.log_ratio(float(text.split(":", 1)[1]))
    raise argparse.ArgumentTypeError(
        f"unknown transform {text!r}; use identity, square, or logratio:U"
    )


def _read_values(path) -> list[float]:
    values = []
    with open(path) as fh:
        for line_num, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise ZcequantError(
                    f"{path}: line {line_num}: not a number: {text!r}"
                ) from None
    if not values:
        raise ZcequantError(f"{path}: no data values")
    return values


def _cmd_estimate(args) -> int:
    transform = args.transform
    values = _read_values(args.data)
    summary = estimators.summarize(values, transform)
    if args.method == "bayes":
        psi = estimators.psi_bayes(summary.n, args.alpha)
    else:
        psi = estimators.psi_ml(summary.n, args.alpha)
    eta = estimators.quantile_estimate(summary, psi, transform)
    predictive = estimators.predictive_cdf_bayes(
        estimators.transform_forward(transform, eta), summary
    )
    fieldsets = {
        "method": args.method,
        "alpha": _fmt(args.alpha),
        "n": summary.n,
        "sigma": _fmt(summary.sigma),
        "psi": _fmt(psi.value),
        "eta": _fmt(eta),
        "predictive_cdf": _fmt(predictive),
    }
    if args.json:
        print(json.dumps(fieldsets))
    else:
        for key, value in fieldsets.items():
            print(f"{key}={value}")
    return 0


def _cmd_exceedance(args) -> int:
    if args.gvs is not None:
        pmf = exceedance.gvs_pmf(args.n, args.gvs, args.N)
    else:
        if args.method == "bayes":
            psi = estimators.psi_bayes(args.n, args.alpha)
        else:
            psi = estimators.psi_ml(args.n, args.alpha)
        pmf = exceedance.beg_pmf(args.n, args.N, psi)
    if args.out == "-":
        print("k,probability")
        for k, p in enumerate(pmf.probabilities):
            print(f"{k},{float(p)!r}")
        meta = " ".join(f"{key}={value}" for key, value in pmf.params.items())
        print(f"# params: {meta}")
    else:
        pmf.to_csv(args.out)
        print(f"mean={_fmt(pmf.mean())}")
        print(f"variance={_fmt(pmf.variance())}")
        print(f"wrote {args.out}")
    return 0


def _cmd_pot(args) -> int:
    series = pot.PotSeries.from_csv(args.data, args.ntail)
    psi = pot.psi_pot_bayes(series.n_tail, series.n_blocks, args.alpha)
    eta = pot.pot_quantile(series, psi)
    print(f"n_blocks={series.n_blocks}")
    print(f"m_bar={_fmt(series.m_bar)}")
    print(f"n_tail={series.n_tail}")
    print(f"u={_fmt(series.threshold)}")
    print(f"xi_hat={_fmt(series.hill_estimate())}")
    print(f"psi={_fmt(psi.value)}")
    print(f"eta={_fmt(eta)}")
    if args.out:
        pmf = pot.unconditional_exceedance_pmf(
            series.n_tail, series.n_blocks, args.N, args.alpha, psi
        )
        pmf.to_csv(args.out)
        print(f"wrote {args.out}")
    return 0


def _run_and_write(name: str, config: sim.ExperimentConfig, outdir: str) -> None:
    result = sim.run(config)
    os.makedirs(outdir, exist_ok=True)
    csv_path = os.path.join(outdir, f"{name}.csv")
    json_path = os.path.join(outdir, f"{name}.json")
    result.write_csv(csv_path)
    result.write_json(json_path)
    print(f"wrote {csv_path}", file=sys.stderr)
    print(f"wrote {json_path}", file=sys.stderr)


def _cmd_simulate(args) -> int:
    configs = sim.load_configs(args.config)
    if args.section:
        configs = [(n, c) for n, c in configs if n == args.section]
        if not configs:
            raise ZcequantError(f"section {args.section!r} not found in {args.config}")
    for name, config in configs:
        if args.seed is not None:
            config.seed = args.seed
        _run_and_write(name, config, args.outdir)
    return 0


def _cmd_reproduce(args) -> int:
    for name, config in sim.figure_configs(args.figure, args.quick, args.seed):
        _run_and_write(name, config, args.outdir)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zcequant",
        description="Zero-coverage-error quantile estimation and exceedance distributions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="quantile estimate from a file of values")
    p.add_argument("data", help="text file, one numeric value per line")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--method", choices=("bayes", "ml"), default="bayes")
    p.add_argument(
        "--transform",
        type=_parse_transform,
        default=estimators.IDENTITY,
        help="identity | square | logratio:U",
    )
    p.add_argument("--json", action="store_true", help="emit one JSON object")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("exceedance", help="write an exceedance-count pmf as CSV")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--N", type=_positive_int, required=True)
    p.add_argument("--alpha", type=float, default=0.99)
    p.add_argument("--method", choices=("bayes", "ml"), default="bayes")
    p.add_argument(
        "--gvs",
        type=_positive_int,
        default=None,
        metavar="M",
        help="order-statistic law over the M-th largest instead of the BEG pmf",
    )
    p.add_argument("--out", default="-", help="output CSV path ('-' for stdout)")
    p.set_defaults(func=_cmd_exceedance)

    p = sub.add_parser("pot", help="peaks-over-threshold fit from block data")
    p.add_argument("data", help="CSV with block_id,value columns")
    p.add_argument("--ntail", type=_positive_int, required=True)
    p.add_argument("--alpha", type=float, default=0.99)
    p.add_argument("--N", type=_positive_int, default=100)
    p.add_argument("--out", default=None, help="write the unconditional pmf CSV here")
    p.set_defaults(func=_cmd_pot)

    p = sub.add_parser("simulate", help="run experiments from a config file")
    p.add_argument("config")
    p.add_argument("--section", default=None)
    p.add_argument("--outdir", default=".")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("reproduce", help="reproduce a published figure or table")
    p.add_argument("--figure", choices=sim.FIGURE_IDS, required=True)
    p.add_argument("--quick", action="store_true", help="1000 replications instead of 10000")
    p.add_argument("--outdir", default=".")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=_cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ZcequantError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
