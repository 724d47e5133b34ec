"""Command-line front end: estimate quantiles, run benchmarks, evaluate
bounds, run the verification suites.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 bound
precondition violated.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import bounds
from .bench import (
    CheckReport,
    ExperimentConfig,
    ExperimentResult,
    centered_grid,
    neighboring_sample_pairs,
    run_experiment,
    verify_dp_ratio,
    verify_gap_law,
    verify_lower_bound_qexp,
    verify_quantile_concentration,
)
from .distributions import DensityEnvelope, DistributionOracle
from .errors import BoundPreconditionError, InvalidArgumentError
from .histogram import quantile_from_histogram
from .mechanisms import NeighboringRelation, PrivacyBudget, RandomSource
from .quantiles import BudgetLedger, QuantileQuery, SortedSample, indexp, recexp

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_BOUND_PRECONDITION = 3

ZERO_NOISE_BANNER = (
    "=" * 64
    + "\n== NON-PRIVATE OUTPUT: zero-noise test mode, no noise is added ==\n"
    + "=" * 64
)


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def load_data_file(path: str) -> SortedSample:
    """Newline-delimited decimal reals in [0, 1]; '#' lines are comments.

    Unsorted input is sorted on load. Malformed or out-of-range values are
    reported with their line number.
    """
    values = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                value = float(line)
            except ValueError:
                raise InvalidArgumentError(f"{path}:{lineno}: not a decimal number: {line!r}")
            if math.isnan(value) or not 0.0 <= value <= 1.0:
                raise InvalidArgumentError(
                    f"{path}:{lineno}: value {value} outside [0, 1]"
                )
            values.append(value)
    return SortedSample.from_unsorted(values)


def _parse_relation(text: str) -> NeighboringRelation:
    try:
        return NeighboringRelation(text)
    except ValueError:
        raise InvalidArgumentError(
            f"unknown relation {text!r} (choose add-remove or replace)"
        )


def _parse_distribution(text: str) -> DistributionOracle:
    text = text.strip()
    if text == "uniform":
        return DistributionOracle.uniform()
    if text.startswith("beta:"):
        parts = text.split(":")
        if len(parts) == 3:
            try:
                alpha, beta = float(parts[1]), float(parts[2])
            except ValueError:
                pass
            else:
                return DistributionOracle.make_beta(alpha, beta)
    raise InvalidArgumentError(
        f"unknown distribution {text!r} (use 'uniform' or 'beta:ALPHA:BETA')"
    )


_CONFIG_KEYS = {
    "config_version",
    "distributions",
    "estimators",
    "n",
    "epsilon",
    "relation",
    "m_grid",
    "orders",
    "trials",
    "bins",
    "base_seed",
}


def parse_config_file(path: str) -> ExperimentConfig:
    """Flat, versioned key/value benchmark configuration.

    One `key = value` pair per line, '#' comments; unknown or duplicate
    keys are errors so a typo cannot silently corrupt an experiment.
    """
    entries: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InvalidArgumentError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in _CONFIG_KEYS:
                raise InvalidArgumentError(f"{path}:{lineno}: unknown key {key!r}")
            if key in entries:
                raise InvalidArgumentError(f"{path}:{lineno}: duplicate key {key!r}")
            entries[key] = value

    def need(key: str) -> str:
        if key not in entries:
            raise InvalidArgumentError(f"{path}: missing required key {key!r}")
        return entries[key]

    def parse_int(key: str) -> int:
        try:
            return int(need(key))
        except ValueError:
            raise InvalidArgumentError(f"{path}: key {key!r}: not an integer")

    if parse_int("config_version") != 1:
        raise InvalidArgumentError(f"{path}: key 'config_version': only version 1 is supported")
    try:
        epsilon = float(need("epsilon"))
    except ValueError:
        raise InvalidArgumentError(f"{path}: key 'epsilon': not a number")
    distributions = tuple(
        _parse_distribution(item) for item in need("distributions").split(",")
    )
    estimators = tuple(item.strip() for item in need("estimators").split(","))
    orders_text = need("orders")
    if orders_text == "centered-grid":
        explicit = None
        try:
            m_grid = tuple(int(item) for item in need("m_grid").split(","))
        except ValueError:
            raise InvalidArgumentError(f"{path}: key 'm_grid': not a list of integers")
    else:
        if "m_grid" in entries:
            raise InvalidArgumentError(
                f"{path}: key 'm_grid' conflicts with explicit orders (remove one)"
            )
        try:
            explicit = tuple(float(item) for item in orders_text.split(","))
        except ValueError:
            raise InvalidArgumentError(
                f"{path}: key 'orders': use 'centered-grid' or a comma-separated list"
            )
        m_grid = (len(explicit),)
    try:
        return ExperimentConfig(
            distributions=distributions,
            estimators=estimators,
            n=parse_int("n"),
            epsilon=epsilon,
            relation=_parse_relation(need("relation")),
            m_grid=m_grid,
            trials=parse_int("trials"),
            histogram_bin_count=parse_int("bins"),
            base_seed=parse_int("base_seed"),
            explicit_orders=explicit,
        )
    except InvalidArgumentError as exc:
        raise InvalidArgumentError(f"{path}: {exc}")


def config_to_dict(config: ExperimentConfig) -> dict:
    return {
        "config_version": 1,
        "distributions": [
            {"label": d.label, "alpha": d.alpha, "beta": d.beta}
            for d in config.distributions
        ],
        "estimators": list(config.estimators),
        "n": config.n,
        "epsilon": config.epsilon,
        "relation": config.relation.value,
        "m_grid": list(config.m_grid),
        "orders": (
            "centered-grid" if config.explicit_orders is None else list(config.explicit_orders)
        ),
        "trials": config.trials,
        "bins": config.histogram_bin_count,
        "base_seed": config.base_seed,
    }


def write_experiment_outputs(result: ExperimentResult, outdir: Path) -> list[Path]:
    """One CSV per distribution plus a JSON summary for exact replay."""
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for oracle in result.config.distributions:
        path = outdir / f"{oracle.slug}.csv"
        lines = ["m,estimator,mean_error,std_error,trials"]
        for m in result.config.m_grid:
            for estimator in result.config.estimators:
                for cell in result.cells:
                    if (
                        cell.distribution == oracle.label
                        and cell.estimator == estimator
                        and cell.m == m
                    ):
                        lines.append(
                            f"{cell.m},{cell.estimator},{cell.mean_error!r},"
                            f"{cell.std_error!r},{cell.trials}"
                        )
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(path)
    summary = {
        "config": config_to_dict(result.config),
        "seed_derivation": (
            "RandomSource(base_seed, stream=(distribution_index, estimator_index, "
            "m_index, trial_index)) via numpy SeedSequence spawn keys"
        ),
        "cells": [
            {
                "distribution": c.distribution,
                "estimator": c.estimator,
                "m": c.m,
                "mean_error": c.mean_error,
                "std_error": c.std_error,
                "trials": c.trials,
                "wall_time_s": c.wall_time,
            }
            for c in result.cells
        ],
    }
    summary_path = outdir / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    written.append(summary_path)
    return written


def cmd_estimate(args) -> int:
    if args.zero_noise:
        print(ZERO_NOISE_BANNER, file=sys.stderr)
        if args.method != "histogram":
            return _fail(
                "--zero-noise applies to the histogram method only: the "
                "exponential-mechanism estimators have no noiseless mode",
                EXIT_INPUT_ERROR,
            )
    try:
        sample = load_data_file(args.data)
        relation = _parse_relation(args.relation)
        if (args.orders is None) == (args.m is None):
            raise InvalidArgumentError("give exactly one of --orders or --m")
        if args.orders is not None:
            try:
                orders = tuple(float(p) for p in args.orders.split(","))
            except ValueError:
                raise InvalidArgumentError(f"--orders: not a list of numbers: {args.orders!r}")
        else:
            orders = centered_grid(args.m)
        budget = PrivacyBudget(args.epsilon, relation)
        query = QuantileQuery(orders, budget)
        rng = RandomSource(args.seed)
        ledger = BudgetLedger()
        if args.method == "indexp":
            estimates = indexp(sample, query, rng, ledger=ledger)
            print(f"spent budget: epsilon = {args.epsilon} ({relation.value}), "
                  f"{query.m} calls at {ledger.eps_per_call!r} each", file=sys.stderr)
        elif args.method == "recexp":
            estimates = recexp(sample, query, rng, ledger=ledger)
            print(
                f"spent budget: epsilon = {args.epsilon} ({relation.value}), "
                f"tree depth {ledger.levels}, per-call epsilon_0 = {ledger.eps_per_call!r}",
                file=sys.stderr,
            )
        else:
            estimates = quantile_from_histogram(
                sample, args.bins, budget, orders, rng, zero_noise=args.zero_noise
            )
            spent = "0 (zero-noise mode)" if args.zero_noise else repr(args.epsilon)
            print(
                f"spent budget: epsilon = {spent} ({relation.value}), {args.bins} bins",
                file=sys.stderr,
            )
    except (InvalidArgumentError, OSError) as exc:
        return _fail(str(exc), EXIT_INPUT_ERROR)
    lines = ["p,q_hat"] + [f"{float(p)!r},{float(q)!r}" for p, q in zip(orders, estimates)]
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        config = parse_config_file(args.config)
    except (InvalidArgumentError, OSError) as exc:
        return _fail(str(exc), EXIT_INPUT_ERROR)
    result = run_experiment(config, workers=args.workers)
    written = write_experiment_outputs(result, Path(args.output))
    for path in written:
        print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


# formula name -> (argument names, evaluator building (value, guard descriptions))
def _bounds_registry():
    def envelope_from(v, need_lipschitz=False):
        return DensityEnvelope(
            lower=v.get("pi_lower", 0.0),
            upper=v.get("pi_upper", math.inf),
            lipschitz=v.get("lipschitz", math.inf if not need_lipschitz else 0.0),
        )

    return {
        "fact_qexp": (
            ("delta", "beta", "eps"),
            lambda v: (
                bounds.fact_qexp_threshold(v["delta"], v["beta"], v["eps"]),
                ["0 < delta <= 1", "0 < beta < 1", "eps > 0"],
            ),
        ),
        "fact_recexp": (
            ("delta", "beta", "eps", "m"),
            lambda v: (
                bounds.fact_recexp_threshold(v["delta"], v["beta"], v["eps"], int(v["m"])),
                ["0 < delta <= 1", "0 < beta < 1", "eps > 0", "m >= 1"],
            ),
        ),
        "thm_qexp": (
            ("n", "gamma", "eps", "pi_lower", "pi_upper"),
            lambda v: (
                bounds.thm_qexp_tail(int(v["n"]), v["gamma"], v["eps"], envelope_from(v)),
                ["n >= 1", "gamma > 0", "eps > 0", "pi_lower > 0"],
            ),
        ),
        "thm_indexp": (
            ("n", "m", "gamma", "eps", "pi_lower", "pi_upper"),
            lambda v: (
                bounds.thm_indexp_tail(
                    int(v["n"]), int(v["m"]), v["gamma"], v["eps"], envelope_from(v)
                ),
                ["n >= 1", "m >= 1", "gamma > 0", "eps > 0", "pi_lower > 0"],
            ),
        ),
        "thm_recexp": (
            ("n", "m", "gamma", "eps", "pi_lower", "pi_upper"),
            lambda v: (
                bounds.thm_recexp_tail(
                    int(v["n"]), int(v["m"]), v["gamma"], v["eps"], envelope_from(v)
                ),
                ["n >= 1", "m >= 1", "gamma > 0", "eps > 0", "pi_lower > 0"],
            ),
        ),
        "thm_hist": (
            ("n", "gamma", "eps", "pi_lower", "pi_upper", "lipschitz", "h"),
            lambda v: (
                bounds.thm_hist_tail(
                    int(v["n"]), v["gamma"], v["eps"], envelope_from(v, True), v["h"]
                ),
                ["gamma > 2 L h / pi_lower", "gamma < 1/2"],
            ),
        ),
        "lemma_hist_density": (
            ("n", "gamma", "eps", "lipschitz", "h"),
            lambda v: (
                bounds.lemma_hist_density_tail(
                    int(v["n"]), v["gamma"], v["eps"], v["lipschitz"], v["h"]
                ),
                ["gamma > L h"],
            ),
        ),
        "lemma_qexp_lower": (
            ("n", "eps"),
            lambda v: (bounds.lemma_qexp_lower(int(v["n"]), v["eps"]), ["gamma in (0, 1/4]"]),
        ),
        "indexp_lower": (
            ("n", "m", "eps"),
            lambda v: (
                bounds.indexp_lower(int(v["n"]), int(v["m"]), v["eps"]),
                ["gamma in (0, 1/4]"],
            ),
        ),
        "recexp_lower": (
            ("n", "m", "eps"),
            lambda v: (
                bounds.recexp_lower(int(v["n"]), int(v["m"]), v["eps"]),
                ["gamma in (0, 1/4]"],
            ),
        ),
        "gap_survival": (
            ("n", "gamma"),
            lambda v: (
                bounds.gap_survival_uniform(int(v["n"]), v["gamma"]),
                ["0 < gamma (zero is returned beyond 1/(n+1))"],
            ),
        ),
        "lemma_gap_lower": (
            ("gamma", "pi_upper"),
            lambda v: (
                bounds.lemma_gap_lower(v["gamma"], v["pi_upper"]),
                ["0 < gamma < 1 / (4 pi_upper)"],
            ),
        ),
        "lemma_quantile_concentration": (
            ("n", "p", "gamma", "pi_lower"),
            lambda v: (
                bounds.lemma_quantile_concentration_tail(
                    int(v["n"]), v["p"], v["gamma"], v["pi_lower"]
                ),
                ["n >= 1", "0 < p < 1", "gamma > 0", "pi_lower > 0"],
            ),
        ),
    }


def cmd_bounds(args) -> int:
    registry = _bounds_registry()
    if args.formula not in registry:
        return _fail(
            f"unknown formula {args.formula!r}; choose from: {', '.join(sorted(registry))}",
            EXIT_INPUT_ERROR,
        )
    expected, evaluate = registry[args.formula]
    values: dict[str, float] = {}
    for item in args.assignments:
        key, sep, raw = item.partition("=")
        if not sep:
            return _fail(f"expected name=value, got {item!r}", EXIT_INPUT_ERROR)
        if key not in expected:
            return _fail(
                f"formula {args.formula!r} does not take {key!r}; expected: {', '.join(expected)}",
                EXIT_INPUT_ERROR,
            )
        try:
            values[key] = float(raw)
        except ValueError:
            return _fail(f"argument {key!r}: not a number: {raw!r}", EXIT_INPUT_ERROR)
    missing = [k for k in expected if k not in values]
    if missing:
        return _fail(
            f"formula {args.formula!r} is missing: {', '.join(missing)}", EXIT_INPUT_ERROR
        )
    try:
        value, guards = evaluate(values)
    except BoundPreconditionError as exc:
        print(f"precondition violated: {exc.guard}", file=sys.stderr)
        return EXIT_BOUND_PRECONDITION
    except InvalidArgumentError as exc:
        return _fail(str(exc), EXIT_INPUT_ERROR)
    print(f"{value:.12g}")
    for guard in guards:
        print(f"guard satisfied: {guard}", file=sys.stderr)
    return EXIT_OK


def _suite_gap_law(seed: int, trials: int) -> CheckReport:
    report = CheckReport("gap-law", True)
    rng = RandomSource(seed)
    for i, (n, gammas) in enumerate([(1, (0.25,)), (5, (0.05,)), (10, (0.02,))]):
        part = verify_gap_law(n, gammas, trials, rng.child(i))
        report.passed &= part.passed
        report.rows.extend(part.rows)
    return report


def _suite_dp_ratio(seed: int, trials: int) -> CheckReport:
    del seed, trials  # analytic check, no randomness
    grid = [round(0.1 * k, 1) for k in range(1, 10)]
    report = CheckReport("dp-ratio", True)
    for relation in NeighboringRelation:
        pairs = neighboring_sample_pairs(grid, 4, relation)
        for epsilon in (0.5, 1.0, 4.0):
            part = verify_dp_ratio(pairs, epsilon)
            report.passed &= part.passed
            for row in part.rows:
                row["relation"] = relation.value
            report.rows.extend(part.rows)
    return report


def _suite_lower_bound(seed: int, trials: int) -> CheckReport:
    del seed, trials  # exact integration, no randomness
    report = CheckReport("lower-bound", True)
    for t in (0.3, 0.5):
        for gamma in (0.1, 0.25):
            part = verify_lower_bound_qexp(range(0, 21), (0.5, 1.0), t, gamma)
            report.passed &= part.passed
            report.rows.extend(part.rows)
    return report


def _suite_quantile_concentration(seed: int, trials: int) -> CheckReport:
    rng = RandomSource(seed)
    report = CheckReport("quantile-concentration", True)
    oracle = DistributionOracle.uniform()
    for i, (n, p, gamma) in enumerate([(1000, 0.5, 0.2), (1000, 0.25, 0.1), (200, 0.5, 0.3)]):
        part = verify_quantile_concentration(oracle, n, p, gamma, trials, rng.child(i))
        report.passed &= part.passed
        report.rows.extend(part.rows)
    return report


_SUITES = {
    "gap-law": _suite_gap_law,
    "dp-ratio": _suite_dp_ratio,
    "lower-bound": _suite_lower_bound,
    "quantile-concentration": _suite_quantile_concentration,
}


def cmd_verify(args) -> int:
    if args.zero_noise:
        print(ZERO_NOISE_BANNER, file=sys.stderr)
    names = list(_SUITES) if args.suite == "all" else [args.suite]
    reports = [_SUITES[name](args.seed, args.trials) for name in names]
    for report in reports:
        for row in report.rows:
            keys = ", ".join(
                f"{k}={row[k]}" for k in row if k not in ("bound", "empirical", "passed")
            )
            verdict = "PASS" if row["passed"] else "FAIL"
            print(
                f"[{report.name}] {keys}: bound={row['bound']:.6g} "
                f"empirical={row['empirical']:.6g} {verdict}",
                file=sys.stderr,
            )
        print(
            f"suite {report.name}: {'PASS' if report.passed else 'FAIL'}", file=sys.stderr
        )
    payload = json.dumps({"suites": [r.to_dict() for r in reports]}, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(payload, encoding="utf-8")
    else:
        sys.stdout.write(payload)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpq",
        description="Differentially private estimation of many statistical quantiles.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    est = sub.add_parser("estimate", help="estimate quantiles of a data file")
    est.add_argument("--data", required=True, help="newline-delimited reals in [0, 1]")
    est.add_argument("--method", required=True, choices=("indexp", "recexp", "histogram"))
    est.add_argument("--orders", help="comma-separated quantile orders in (0, 1)")
    est.add_argument(
        "--m", type=int,
        help="use the built-in m-point centered grid, orders 1/4 + j/(2(m+1))",
    )
    est.add_argument("--epsilon", type=float, required=True)
    est.add_argument("--relation", choices=("add-remove", "replace"), default="replace")
    est.add_argument("--bins", type=int, default=200, help="histogram bins")
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--output", help="CSV output path (default: stdout)")
    est.add_argument("--zero-noise", action="store_true", help="NON-PRIVATE test mode")
    est.set_defaults(func=cmd_estimate)

    ben = sub.add_parser("bench", help="run a Monte-Carlo benchmark from a config file")
    ben.add_argument("--config", required=True)
    ben.add_argument("--output", required=True, help="output directory")
    ben.add_argument("--workers", type=int, default=1)
    ben.set_defaults(func=cmd_bench)

    bnd = sub.add_parser("bounds", help="evaluate a closed-form bound")
    bnd.add_argument("formula")
    bnd.add_argument("assignments", nargs="*", metavar="name=value")
    bnd.set_defaults(func=cmd_bounds)

    ver = sub.add_parser("verify", help="run a verification suite")
    ver.add_argument("suite", choices=tuple(_SUITES) + ("all",))
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--trials", type=int, default=20000)
    ver.add_argument("--output", help="JSON report path (default: stdout)")
    ver.add_argument("--zero-noise", action="store_true", help="NON-PRIVATE test mode")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
