"""
Parameter grid experiment on the synthetic beta-binomial score law.

For every (a, b, m, n) cell and repeat, one calibration sample serves as the
accessible data of the estimators, the exact expected size is computed, and a
Monte Carlo average of constructed set sizes is recorded alongside.

run_grid(...) - all cells and repeats as a canonically ordered DataFrame.
summarize_grid(frame) - containment rates, studentized MC deviations and errors per n.
"""

import itertools
import logging

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from ..errors import DomainError
from ..set_size.baselines import monte_carlo_sizes
from ..set_size.estimators import KnownFactorEstimator
from .beta_binomial import (DEFAULT_FACTOR_WEIGHT, BetaBinomialScoreSampler, SyntheticConfig, sample_scores,
                            theoretical_size)

logger = logging.getLogger(__name__)

DESK_AB_VALUES = (0.0625, 0.25, 1.0, 4.0, 16.0)
DESK_M_VALUES = (10, 100)
DESK_N_VALUES = (10, 100, 1000)

GRID_COLUMNS = ["a", "b", "m", "n", "alpha", "gamma", "repeat", "theoretical", "mc_avg", "point",
                "lower", "upper", "contains_truth", "mc_se"]
SORT_COLUMNS = ["a", "b", "m", "n", "repeat", "gamma"]


def _run_cell(cell_index, repeat, a, b, m, n, alpha, gamma_set, runs, master_seed):
    # Child 0 seeds the calibration sample, children 1..runs seed the Monte Carlo runs
    seeds = np.random.SeedSequence(master_seed, spawn_key=(cell_index, repeat)).spawn(runs + 1)

    config = SyntheticConfig(m=m, a=a, b=b)
    sample = sample_scores(config, n, np.random.default_rng(seeds[0]))
    truth = theoretical_size(config, n, alpha)
    mc = monte_carlo_sizes(BetaBinomialScoreSampler(config), n, alpha, seeds[1:], config.total_weight)

    estimator = KnownFactorEstimator(sample, config.factor)
    records = []
    for gamma in gamma_set:
        estimate = estimator.interval(n, alpha, gamma)
        records.append({
            "a": a, "b": b, "m": m, "n": n, "alpha": alpha, "gamma": gamma, "repeat": repeat,
            "theoretical": truth,
            "mc_avg": mc.mean,
            "point": estimate.point,
            "lower": estimate.interval.lower,
            "upper": estimate.interval.upper,
            "contains_truth": bool(estimate.interval.lower <= truth <= estimate.interval.upper),
            "mc_se": mc.standard_error,
        })
    return records


def run_grid(a_set, b_set, m_set, n_set, gamma_set, alpha, runs_per_setting, repeats, master_seed,
             threads=1, progress=False):
    """
    Run the synthetic validation grid

    Args:
        a_set, iterable: First beta parameters
        b_set, iterable: Second beta parameters
        m_set, iterable: Numbers of score atoms
        n_set, iterable: Calibration set sizes
        gamma_set, iterable: Confidence parameters of the intervals
        alpha, float: Significance level
        runs_per_setting, int: Monte Carlo runs per cell and repeat
        repeats, int: Independent repeats per cell
        master_seed, int: Seed every cell derives its streams from
        threads, int: Parallel workers
        progress, bool: Show a progress bar on stderr

    Returns:
        pd.DataFrame: One record per (cell, repeat, gamma), sorted by a, b, m, n, repeat, gamma
    """
    cells = list(itertools.product(a_set, b_set, m_set, n_set))
    gamma_set = list(gamma_set)
    if not cells or not gamma_set:
        raise DomainError("Every parameter set of the grid must be non-empty")
    if runs_per_setting < 1 or repeats < 1:
        raise DomainError(f"Runs and repeats must be positive, got runs={runs_per_setting}, repeats={repeats}")

    tasks = [(c, r, *cell) for c, cell in enumerate(cells) for r in range(repeats)]
    logger.info("Running %d cells x %d repeats on %d thread(s)", len(cells), repeats, threads)

    results = Parallel(n_jobs=threads)(
        delayed(_run_cell)(c, r, a, b, m, n, alpha, gamma_set, runs_per_setting, master_seed)
        for c, r, a, b, m, n in tqdm(tasks, desc="grid", disable=not progress)
    )

    frame = pd.DataFrame([record for records in results for record in records], columns=GRID_COLUMNS)
    return frame.sort_values(SORT_COLUMNS, kind="mergesort").reset_index(drop=True)


def summarize_grid(frame, runs_per_setting=None, weight=DEFAULT_FACTOR_WEIGHT):
    """
    Aggregate a grid into the validation statistics

    When runs_per_setting is given, cells whose runs all produced the same size get
    the standard error of one run moving by one atom, weight / runs_per_setting,
    instead of zero.

    Args:
        frame, pd.DataFrame: Output of run_grid
        runs_per_setting, int: Monte Carlo runs behind every mc_avg
        weight, float: Factor weight of every atom

    Returns:
        dict: containment rate per gamma, share of MC averages within 3 standard
            errors of the truth, and median absolute point error per n
    """
    containment = frame.groupby("gamma")["contains_truth"].mean().to_dict()

    # One MC average per (cell, repeat), independent of gamma
    runs = frame.drop_duplicates(["a", "b", "m", "n", "repeat"])
    deviation = (runs["mc_avg"] - runs["theoretical"]).abs()
    standard_error = runs["mc_se"]
    if runs_per_setting is not None:
        standard_error = standard_error.where(standard_error > 0, weight / runs_per_setting)
    within = (deviation <= 3.0 * standard_error) | (deviation <= 1e-12)

    error = (runs["point"] - runs["theoretical"]).abs()
    median_error = error.groupby(runs["n"]).median().to_dict()

    return {
        "containment": containment,
        "mc_within_3se": float(within.mean()),
        "median_abs_error_by_n": median_error,
    }
