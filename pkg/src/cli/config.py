"""
Run configuration of the command line tool.

RunConfig - validated flags of one command.
load_yaml_defaults(path) - flag defaults from a YAML mapping.
resolve_threads(value) - --threads, then SIZE_CLI_THREADS, then 1.
resolve_seed(value) - the given seed or a fresh one from OS entropy.
configure_logging(verbosity) - root logger setup for -v / -vv.
"""

import logging
import os
from typing import Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..errors import DataError, DomainError
from ..set_size.factors import FactorSpec
from ..synthetic.experiment import DESK_AB_VALUES, DESK_M_VALUES, DESK_N_VALUES
from .scorer_fixtures import parse_scorer

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "SIZE_CLI_THREADS"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class RunConfig(BaseModel):
    """
    Flags shared by every command, validated before anything runs
    """
    model_config = ConfigDict(extra="forbid")

    command: str
    scores: Optional[str] = None
    matrix: Optional[str] = None
    marginal: Optional[str] = None
    row: Optional[str] = None
    data: Optional[str] = None
    scorer: Optional[str] = None
    labels: Optional[list[float]] = None
    label_grid: Optional[str] = None
    train_fraction: float = Field(0.5, gt=0.0, lt=1.0)
    num_labels: Optional[int] = Field(None, ge=1)
    distribution: Literal["uniform", "normal", "exponential", "synthetic"] = "uniform"
    progress: bool = False
    alpha: float = Field(0.1, gt=0.0, lt=1.0)
    alphas: Optional[list[float]] = None
    n: Optional[int] = Field(None, ge=1)
    gamma: Optional[float] = Field(None, gt=0.0, lt=1.0)
    gammas: list[float] = [0.1]
    factor: str = "l1"
    seed: Optional[int] = Field(None, ge=0)
    runs: int = Field(200, ge=1)
    repeats: int = Field(10, ge=1)
    trials: int = Field(10000, ge=1)
    threads: Optional[int] = Field(None, ge=1)
    integration_upper: Optional[float] = None
    label_measure: Optional[Literal["counting", "trapezoid"]] = None
    a_values: list[float] = list(DESK_AB_VALUES)
    b_values: list[float] = list(DESK_AB_VALUES)
    m_values: list[int] = list(DESK_M_VALUES)
    n_values: list[int] = list(DESK_N_VALUES)
    output: Optional[str] = None

    @field_validator("alphas", "gammas")
    @classmethod
    def _levels_in_unit_interval(cls, values):
        if values is not None and any(not 0.0 < v < 1.0 for v in values):
            raise ValueError(f"levels must lie in (0, 1), got {values}")
        return values

    @field_validator("factor")
    @classmethod
    def _factor_parses(cls, value):
        FactorSpec.parse(value)
        return value

    @field_validator("scorer")
    @classmethod
    def _scorer_parses(cls, value):
        if value is not None:
            parse_scorer(value)
        return value

    @field_validator("a_values", "b_values")
    @classmethod
    def _positive(cls, values):
        if not values or any(v <= 0 for v in values):
            raise ValueError(f"beta-binomial parameters must be positive, got {values}")
        return values

    @field_validator("m_values", "n_values")
    @classmethod
    def _positive_counts(cls, values):
        if not values or any(v < 1 for v in values):
            raise ValueError(f"counts must be at least 1, got {values}")
        return values

    @property
    def factor_spec(self):
        return FactorSpec.parse(self.factor)


def load_yaml_defaults(path):
    """
    Read flag defaults from a YAML file

    Args:
        path, str: YAML file holding a mapping of flag names to values

    Returns:
        dict: The mapping, keys with dashes turned into underscores
    """
    try:
        with open(path, "r") as config_file:
            content = yaml.safe_load(config_file)
    except yaml.YAMLError as error:
        raise DataError(f"Invalid YAML in {path}: {error}") from error

    if content is None:
        return {}
    if not isinstance(content, dict):
        raise DataError(f"Configuration file {path} must hold a mapping")
    return {str(key).replace("-", "_"): value for key, value in content.items()}


def resolve_threads(value=None):
    if value is None:
        value = os.environ.get(THREADS_ENV_VAR, 1)
    try:
        threads = int(value)
    except (TypeError, ValueError) as error:
        raise DomainError(f"Thread count must be an integer, got {value!r}") from error
    if threads < 1:
        raise DomainError(f"Thread count must be at least 1, got {threads}")
    return threads


def resolve_seed(value=None):
    """
    Return the given seed, or draw one from OS entropy and log it
    """
    if value is not None:
        return value
    seed = int(np.random.SeedSequence().entropy)
    logger.info("No seed given, using %d", seed)
    return seed


def configure_logging(verbosity=0):
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)
