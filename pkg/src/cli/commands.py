"""
Command line surface of the set size estimators.

estimate - known-factor point (and interval) estimate from accessible scores.
estimate-matrix - unknown-factor estimate from a score matrix and marginal scores, or from records (--data)
    scored by a fitted scorer fixture (--scorer).
conditional - expected size for one test feature.
synthetic - parameter grid on the beta-binomial score law, CSV records.
mc - Monte Carlo average of constructed set sizes with baseline intervals, also on scorer fixtures.
coverage - empirical miscoverage of split conformal prediction, also on scorer fixtures.

Exit codes: 0 success, 2 usage error, 3 data error, 4 infinite expected size.
"""

import argparse
import logging
import math
import sys
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ValidationError

from ..conformal.scorers import ScoreMatrix, counting_weights, trapezoid_weights
from ..conformal.split_conformal import miscoverage_rate, n_alpha
from ..errors import DataError, DomainError, UnsupportedFactorError
from ..set_size.baselines import (ScoreDistributionSampler, ScoreMatrixSampler, bernstein_interval, clt_interval,
                                  hoeffding_interval, mc_average)
from ..set_size.estimators import (KnownFactorEstimator, conditional_interval_estimate_feature,
                                   conditional_point_estimate_feature, interval_estimate_unknown,
                                   point_estimate_unknown)
from ..set_size.factors import factor_atoms, factor_support
from ..set_size.theory import expected_size_curve_alpha
from ..synthetic.beta_binomial import BetaBinomialScoreSampler, SyntheticConfig, theoretical_size
from ..synthetic.experiment import run_grid, summarize_grid
from .config import RunConfig, configure_logging, load_yaml_defaults, resolve_seed, resolve_threads
from .data_io import read_feature_row, read_score_matrix, read_scores, write_grid, write_report
from .scorer_fixtures import load_scorer_matrix

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INFINITE = 4

SCHEMA_VERSION = "1"
DEFAULT_GAMMA = 0.1


def _finite(value):
    # JSON has no infinity, infinite values become null
    if value is None or math.isinf(value):
        return None
    return value


class Report(BaseModel):
    schema_version: Literal["1"] = SCHEMA_VERSION


class CurvePoint(BaseModel):
    alpha: float
    point: Optional[float]
    infinite: bool


class EstimateReport(Report):
    point: Optional[float]
    infinite: bool
    lower: Optional[float] = None
    upper: Optional[float] = None
    gamma: Optional[float] = None
    heuristic: Optional[bool] = None
    k: int
    n: int
    alpha: float
    n_alpha: int
    factor: str
    estimator_kind: str
    integration_upper: Optional[float] = None
    truncation: bool = False
    curve: Optional[list[CurvePoint]] = None
    seed: Optional[int] = None

    @classmethod
    def fields_from(cls, estimate):
        meta = estimate.meta
        fields = dict(point=_finite(estimate.point), infinite=estimate.is_infinite, k=meta.k, n=meta.n,
                      alpha=meta.alpha, n_alpha=meta.n_alpha, factor=meta.factor,
                      estimator_kind=meta.estimator_kind, integration_upper=_finite(meta.integration_upper),
                      truncation=meta.truncated)
        if estimate.interval is not None:
            fields.update(lower=_finite(estimate.interval.lower), upper=_finite(estimate.interval.upper),
                          gamma=estimate.interval.gamma, heuristic=estimate.interval.heuristic)
        return fields

    @classmethod
    def from_estimate(cls, estimate, **extra):
        return cls(**cls.fields_from(estimate), **extra)


class ConditionalReport(EstimateReport):
    labels: int


class IntervalReport(BaseModel):
    method: str
    lower: float
    upper: Optional[float]
    raw_lower: float
    raw_upper: float
    gamma: float
    heuristic: bool


class MonteCarloReport(Report):
    seed: int
    source: str
    runs: int
    n: int
    alpha: float
    mean: Optional[float]
    infinite: bool
    standard_error: Optional[float] = None
    theoretical: Optional[float] = None
    intervals: list[IntervalReport] = []


class CoverageReport(Report):
    seed: int
    source: str
    trials: int
    n: int
    alpha: float
    miscoverage: float


def _require(value, flag):
    if value is None:
        raise DomainError(f"{flag} is required")
    return value


def _exit_code(infinite):
    return EXIT_INFINITE if infinite else EXIT_OK


def _scorer_fixture(config, seed):
    _require(config.scorer, "--scorer")
    return load_scorer_matrix(config, np.random.default_rng(seed))


def _scorer_source(config):
    return f"scorer:{config.scorer}:{config.data}"


def cmd_estimate(config, out):
    """
    Known-factor estimate from a file of accessible scores
    """
    n = _require(config.n, "--n")
    estimator = KnownFactorEstimator(read_scores(_require(config.scores, "scores")), config.factor_spec)
    if config.gamma is None:
        estimate = estimator.point(n, config.alpha)
    else:
        estimate = estimator.interval(n, config.alpha, config.gamma, config.integration_upper)

    curve = None
    if config.alphas:
        sizes = expected_size_curve_alpha(estimator.tilde, estimator.factor, n, config.alphas)
        curve = [CurvePoint(alpha=a, point=_finite(float(s)), infinite=bool(math.isinf(s)))
                 for a, s in zip(config.alphas, sizes)]

    write_report(EstimateReport.from_estimate(estimate, curve=curve), out)
    return _exit_code(estimate.is_infinite)


def cmd_estimate_matrix(config, out):
    """
    Unknown-factor estimate from a score matrix and the accessible marginal scores

    The matrix comes from the matrix and marginal files, or from accessible records
    scored by a fitted scorer fixture when --data is given.
    """
    n = _require(config.n, "--n")
    seed = None
    if config.data is not None:
        seed = resolve_seed(config.seed)
        matrix = _scorer_fixture(config, seed).matrix
    else:
        label_grid, scores = read_score_matrix(_require(config.matrix, "matrix (or --data)"))
        marginal = read_scores(_require(config.marginal, "marginal"))
        if config.label_measure == "trapezoid":
            weights = trapezoid_weights(label_grid)
        else:
            weights = counting_weights(len(label_grid))
        matrix = ScoreMatrix(scores, tuple(label_grid), weights, marginal)

    if config.gamma is None:
        estimate = point_estimate_unknown(matrix, n, config.alpha)
    else:
        estimate = interval_estimate_unknown(matrix, n, config.alpha, config.gamma)

    write_report(EstimateReport.from_estimate(estimate, seed=seed), out)
    return _exit_code(estimate.is_infinite)


def cmd_conditional(config, out):
    """
    Expected size for the test feature whose label scores are in the row file
    """
    n = _require(config.n, "--n")
    accessible = read_scores(_require(config.scores, "scores"))
    row, weights = read_feature_row(_require(config.row, "row"))
    if config.gamma is None:
        estimate = conditional_point_estimate_feature(accessible, row, n, config.alpha, weights)
    else:
        estimate = conditional_interval_estimate_feature(accessible, row, n, config.alpha, config.gamma, weights)

    write_report(ConditionalReport.from_estimate(estimate, labels=len(row)), out)
    return _exit_code(estimate.is_infinite)


def cmd_synthetic(config, out):
    """
    Synthetic validation grid as CSV records
    """
    seed = resolve_seed(config.seed)
    frame = run_grid(config.a_values, config.b_values, config.m_values, config.n_values, config.gammas,
                     config.alpha, config.runs, config.repeats, seed,
                     threads=resolve_threads(config.threads), progress=bool(config.progress))
    logger.info("Grid summary: %s", summarize_grid(frame, config.runs))

    write_grid(frame, config.output if config.output is not None else out, seed)
    return EXIT_OK


def _bootstrap_sampler(config):
    scores = read_scores(config.scores)
    factor = config.factor_spec
    if not factor.is_known:
        raise UnsupportedFactorError("Monte Carlo sizes need a known factor")

    support = factor_support(factor)
    bound = None
    if support.is_discrete:
        bound = float(factor_atoms(factor)[1].sum())

    def draw(rng, size):
        return rng.choice(scores, size)

    sampler = ScoreDistributionSampler(draw, factor, -math.inf if support.is_discrete else support.lower)
    # Resampling the scores makes their empirical tilde-CDF the exact one
    exact = KnownFactorEstimator(scores, factor)
    return sampler, bound, exact, support


def cmd_mc(config, out):
    """
    Monte Carlo average of set sizes with CLT, Hoeffding and Bernstein intervals

    Sizes come from a scorer fixture's score matrix (--data), resampled scores
    (--scores) or the synthetic law.
    """
    n = _require(config.n, "--n")
    seed = resolve_seed(config.seed)
    gamma = config.gamma if config.gamma is not None else DEFAULT_GAMMA

    if config.data is not None:
        matrix = _scorer_fixture(config, seed).matrix
        sampler = ScoreMatrixSampler(matrix)
        bound, source, unbounded = sampler.bound, _scorer_source(config), False
        truth = lambda: point_estimate_unknown(matrix, n, config.alpha).point
    elif config.scores is not None:
        sampler, bound, exact, support = _bootstrap_sampler(config)
        source = f"bootstrap:{config.scores}"
        unbounded = support.is_unbounded_above
        truth = lambda: exact.point(n, config.alpha).point
    else:
        synthetic = SyntheticConfig(m=config.m_values[0], a=config.a_values[0], b=config.b_values[0])
        sampler, bound = BetaBinomialScoreSampler(synthetic), synthetic.total_weight
        source = f"synthetic:m={synthetic.m},a={synthetic.a:g},b={synthetic.b:g}"
        unbounded = False
        truth = lambda: theoretical_size(synthetic, n, config.alpha)

    if n_alpha(n, config.alpha) == n and unbounded:
        logger.warning("Threshold is always infinite for n=%d at alpha=%.4g", n, config.alpha)
        write_report(MonteCarloReport(seed=seed, source=source, runs=config.runs, n=n, alpha=config.alpha,
                                      mean=None, infinite=True), out)
        return EXIT_INFINITE

    mc = mc_average(sampler, n, config.alpha, config.runs, seed, bound)
    intervals = []
    if len(mc.samples) >= 2:
        intervals.append(clt_interval(mc.samples, gamma))
    if bound is not None:
        intervals.append(hoeffding_interval(mc.samples, gamma))
        if len(mc.samples) >= 2:
            intervals.append(bernstein_interval(mc.samples, gamma))

    report = MonteCarloReport(
        seed=seed, source=source, runs=config.runs, n=n, alpha=config.alpha, mean=mc.mean, infinite=False,
        standard_error=_finite(mc.standard_error), theoretical=_finite(truth()),
        intervals=[IntervalReport(method=i.method, lower=i.lower, upper=_finite(i.upper), raw_lower=i.raw_lower,
                                  raw_upper=i.raw_upper, gamma=i.gamma, heuristic=i.heuristic) for i in intervals],
    )
    write_report(report, out)
    return EXIT_OK


DISTRIBUTIONS = {
    "uniform": lambda rng, size: rng.random(size),
    "normal": lambda rng, size: rng.standard_normal(size),
    "exponential": lambda rng, size: rng.exponential(1.0, size),
}


def cmd_coverage(config, out):
    """
    Fraction of trials whose test score falls above the threshold
    """
    n = _require(config.n, "--n")
    seed = resolve_seed(config.seed)

    if config.data is not None:
        marginal = _scorer_fixture(config, seed).matrix.marginal
        sampler = lambda rng, size: rng.choice(marginal, size)
        source = _scorer_source(config)
    elif config.scores is not None:
        scores = read_scores(config.scores)
        sampler = lambda rng, size: rng.choice(scores, size)
        source = f"bootstrap:{config.scores}"
    elif config.distribution == "synthetic":
        synthetic = SyntheticConfig(m=config.m_values[0], a=config.a_values[0], b=config.b_values[0])
        sampler = BetaBinomialScoreSampler(synthetic)
        source = f"synthetic:m={synthetic.m},a={synthetic.a:g},b={synthetic.b:g}"
    else:
        sampler = DISTRIBUTIONS[config.distribution]
        source = config.distribution

    rate = miscoverage_rate(sampler, n, config.alpha, config.trials, seed)
    write_report(CoverageReport(seed=seed, source=source, trials=config.trials, n=n, alpha=config.alpha,
                                miscoverage=rate), out)
    return EXIT_OK


COMMANDS = {
    "estimate": cmd_estimate,
    "estimate-matrix": cmd_estimate_matrix,
    "conditional": cmd_conditional,
    "synthetic": cmd_synthetic,
    "mc": cmd_mc,
    "coverage": cmd_coverage,
}


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser():
    """
    Argument parser with one sub-command per operation

    Optional flags default to None so that --config values and RunConfig defaults
    fill whatever is not given on the command line.
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    common.add_argument("--config", help="YAML file with flag defaults")
    common.add_argument("--alpha", type=float, help="significance level")
    common.add_argument("--seed", type=int, help="master seed, drawn from OS entropy when omitted")

    fixture = argparse.ArgumentParser(add_help=False)
    fixture.add_argument("--data", help="CSV of accessible records, feature columns and a label column")
    fixture.add_argument("--scorer", help="l1, lp:<p>, cqr (one feature column) or zero-one, lac, aps")
    fixture.add_argument("--labels", type=_float_list, help="comma separated label grid of regression scorers")
    fixture.add_argument("--label-grid", dest="label_grid", help="label grid file, one label per line")
    fixture.add_argument("--train-fraction", dest="train_fraction", type=float,
                         help="leading share of the records that fits the predictor")
    fixture.add_argument("--num-labels", dest="num_labels", type=int, help="label space size of classifiers")
    fixture.add_argument("--label-measure", dest="label_measure", choices=["counting", "trapezoid"])

    parser = argparse.ArgumentParser(prog="set-size", description="Expected prediction set size of split conformal "
                                                                  "prediction")
    subparsers = parser.add_subparsers(dest="command", required=True)

    estimate = subparsers.add_parser("estimate", parents=[common], help="known-factor estimate")
    estimate.add_argument("scores", help="CSV of accessible scores")
    estimate.add_argument("--n", type=int, help="calibration set size")
    estimate.add_argument("--factor", help="l1, lp:<p>, lp:<p>:<m>, zero-one:<L>")
    estimate.add_argument("--gamma", type=float, help="confidence parameter of the interval")
    estimate.add_argument("--integration-max", dest="integration_upper", type=float,
                          help="upper end of the upper-bound integral")
    estimate.add_argument("--alphas", type=_float_list, help="comma separated significance levels to sweep")

    matrix = subparsers.add_parser("estimate-matrix", parents=[common, fixture], help="unknown-factor estimate")
    matrix.add_argument("matrix", nargs="?", help="CSV of scores, header row holds the label grid")
    matrix.add_argument("marginal", nargs="?", help="CSV of accessible scores at the true labels")
    matrix.add_argument("--n", type=int, help="calibration set size")
    matrix.add_argument("--gamma", type=float, help="confidence parameter of the interval")

    conditional = subparsers.add_parser("conditional", parents=[common], help="expected size for one feature")
    conditional.add_argument("scores", help="CSV of accessible scores")
    conditional.add_argument("row", help="CSV of the feature's scores over the labels, optional weight column")
    conditional.add_argument("--n", type=int, help="calibration set size")
    conditional.add_argument("--gamma", type=float, help="confidence parameter of the interval")

    synthetic = subparsers.add_parser("synthetic", parents=[common], help="synthetic validation grid")
    synthetic.add_argument("--a", dest="a_values", type=float, nargs="+")
    synthetic.add_argument("--b", dest="b_values", type=float, nargs="+")
    synthetic.add_argument("--m", dest="m_values", type=int, nargs="+")
    synthetic.add_argument("--n", dest="n_values", type=int, nargs="+")
    synthetic.add_argument("--gamma", dest="gammas", type=float, nargs="+")
    synthetic.add_argument("--runs", type=int, help="Monte Carlo runs per cell")
    synthetic.add_argument("--repeats", type=int)
    synthetic.add_argument("--threads", type=int, help="parallel workers, SIZE_CLI_THREADS when omitted")
    synthetic.add_argument("--output", help="CSV path, stdout when omitted")
    synthetic.add_argument("--progress", action="store_true", default=None)

    mc = subparsers.add_parser("mc", parents=[common, fixture], help="Monte Carlo average of set sizes")
    mc.add_argument("--scores", help="CSV of scores to resample, the synthetic law when omitted")
    mc.add_argument("--factor", help="factor of the resampled scores")
    mc.add_argument("--a", dest="a_values", type=float, nargs=1)
    mc.add_argument("--b", dest="b_values", type=float, nargs=1)
    mc.add_argument("--m", dest="m_values", type=int, nargs=1)
    mc.add_argument("--n", type=int, help="calibration set size")
    mc.add_argument("--gamma", type=float)
    mc.add_argument("--runs", type=int)

    coverage = subparsers.add_parser("coverage", parents=[common, fixture], help="empirical miscoverage")
    coverage.add_argument("--scores", help="CSV of scores to resample")
    coverage.add_argument("--distribution", choices=["uniform", "normal", "exponential", "synthetic"])
    coverage.add_argument("--a", dest="a_values", type=float, nargs=1)
    coverage.add_argument("--b", dest="b_values", type=float, nargs=1)
    coverage.add_argument("--m", dest="m_values", type=int, nargs=1)
    coverage.add_argument("--n", type=int, help="calibration set size")
    coverage.add_argument("--trials", type=int)

    return parser


def build_config(args):
    """
    Merge --config defaults with the given flags into a validated RunConfig
    """
    defaults = load_yaml_defaults(args.config) if args.config else {}
    flags = {key: value for key, value in vars(args).items()
             if value is not None and key not in ("config", "verbose")}
    return RunConfig(**{**defaults, **flags})


def main(argv=None, stdout=None):
    """
    Run one command

    Args:
        argv, list: Arguments without the program name, sys.argv[1:] when None
        stdout, file: Stream for reports, sys.stdout when None

    Returns:
        int: The exit code
    """
    out = sys.stdout if stdout is None else stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_request:
        return exit_request.code

    configure_logging(args.verbose)
    try:
        config = build_config(args)
        return COMMANDS[config.command](config, out)
    except DataError as error:
        print(f"data error: {error}", file=sys.stderr)
        return EXIT_DATA
    except OSError as error:
        print(f"data error: {error}", file=sys.stderr)
        return EXIT_DATA
    except (ValidationError, DomainError, UnsupportedFactorError) as error:
        print(f"usage error: {error}", file=sys.stderr)
        return EXIT_USAGE
