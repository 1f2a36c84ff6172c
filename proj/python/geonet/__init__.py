"""Geometric constructive networks: randomized single-hidden-layer regression
models grown node by node under a compact angle constraint."""

from ._geonet import (
    Dataset,
    GeoNet,
    Sampling,
    TrainConfig,
    TrainResult,
    TrainTrace,
    TraceRow,
    function_target,
    gamma,
    gen_function,
    gen_grinding_surrogate,
    grinding_surrogate_target,
    load_csv,
    node_utilization,
    rmse,
    run_experiment_json,
    save_csv,
    split,
    train,
)

__all__ = [
    "Dataset",
    "GeoNet",
    "Sampling",
    "TrainConfig",
    "TrainResult",
    "TrainTrace",
    "TraceRow",
    "function_target",
    "gamma",
    "gen_function",
    "gen_grinding_surrogate",
    "grinding_surrogate_target",
    "load_csv",
    "node_utilization",
    "rmse",
    "run_experiment_json",
    "save_csv",
    "split",
    "train",
]

__version__ = "0.1.0"
