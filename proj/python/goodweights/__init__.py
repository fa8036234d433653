"""Random feature map surrogates for Lorenz-63 with good-region internal weights."""

import csv
import io
import json

from ._core import (
    ClassBounds,
    ExperimentResult,
    ForecastConfig,
    IntegratorConfig,
    NumericError,
    RowClass,
    SamplerConfig,
    SurrogateModel,
    Trajectory,
    classify_row,
    effective_range,
    feature_matrix,
    fit,
    forecast_time,
    generate_trajectory,
    ridge_solve,
    row_class_counts,
    sample_internal_weights,
    train_network,
    uniform_internal_weights,
)
from ._core import run_experiment as _run_experiment

__all__ = [
    "ClassBounds",
    "ExperimentResult",
    "ForecastConfig",
    "IntegratorConfig",
    "NumericError",
    "RowClass",
    "SamplerConfig",
    "SurrogateModel",
    "Trajectory",
    "classify_row",
    "effective_range",
    "feature_matrix",
    "fit",
    "forecast_time",
    "generate_trajectory",
    "ridge_solve",
    "row_class_counts",
    "run_experiment",
    "sample_internal_weights",
    "summary",
    "records",
    "train_network",
    "uniform_internal_weights",
]


def run_experiment(config, workers=1, keep_going=False):
    """Run an experiment from a config dict (or JSON string)."""
    text = config if isinstance(config, str) else json.dumps(config)
    return _run_experiment(text, workers, keep_going)


def summary(result):
    return json.loads(result.summary_json)


def records(result):
    return list(csv.DictReader(io.StringIO(result.results_csv())))
