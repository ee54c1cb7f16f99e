"""Significance tests for the functional linear model with scalar response.

Tests ``H0: Theta = 0`` in ``Y = <Theta, X> + b + eps`` with four statistics
(T1, T2, T3, T3s) calibrated by N(0, 2) asymptotics, naive paired bootstrap,
wild multiplier bootstrap or a Monte Carlo precursor, plus a simulation
harness for size/power studies.
"""

from flmdep.bootstrap import (
    CalibrationKind,
    CalibrationMethod,
    TestOutcome,
    VarianceMode,
    run_test,
)
from flmdep.errors import (
    AlignmentError,
    ConfigurationError,
    DataError,
    DegenerateSignalError,
    DegenerateVarianceError,
    FlmdepError,
    RankError,
)
from flmdep.fpca import FpcaDecomposition, decompose, estimate_theta
from flmdep.hilbert import FunctionalSample, Grid, center, inner_product, norm
from flmdep.rng import Multiplier
from flmdep.simgen import MethodSpec, ScenarioSpec, generate_dataset, run_scenario
from flmdep.stats import StatisticKind, t1, t2, t3, t3s, t_cross

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "CalibrationKind",
    "CalibrationMethod",
    "ConfigurationError",
    "DataError",
    "DegenerateSignalError",
    "DegenerateVarianceError",
    "FlmdepError",
    "FpcaDecomposition",
    "FunctionalSample",
    "Grid",
    "MethodSpec",
    "Multiplier",
    "RankError",
    "ScenarioSpec",
    "StatisticKind",
    "TestOutcome",
    "VarianceMode",
    "center",
    "decompose",
    "estimate_theta",
    "generate_dataset",
    "inner_product",
    "norm",
    "run_scenario",
    "run_test",
    "t1",
    "t2",
    "t3",
    "t3s",
    "t_cross",
]
