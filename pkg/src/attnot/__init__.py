"""Exact optimal transport, a traceable numpy transformer encoder, transport
diagnostics of its training trajectories, and a transport-based classifier."""

from .analysis import MetricsReport, TrajectoryRecord, compute_report
from .data import (
    ClassLayout,
    DatasetTensor,
    DummyLayout,
    Standardizer,
    make_dummy_dataset,
    make_layout,
    read_dataset_csv,
    rotate_layout,
    sample_dataset,
    standardize,
    write_dataset_csv,
)
from .errors import (
    AttnOTError,
    DimensionMismatchError,
    DivergenceError,
    ParameterError,
    ParseError,
    SolverError,
)
from .experiments import (
    ExperimentConfig,
    default_config,
    dump_trajectory,
    ingest_real_csv,
    load_config,
    read_trajectory,
    run_experiment,
    run_pretrained,
    run_real_data,
)
from .nn import (
    AttentionParams,
    MLP,
    TrainConfig,
    TrainingTrace,
    TransformerClassifier,
    attention_forward,
    encoder_forward,
    freeze_mlp,
    train_full_batch,
)
from .ot import (
    Assignment,
    Coupling,
    GaussianSpec,
    PointCloud,
    build_cost_matrix,
    gaussian_wasserstein2,
    push_forward,
    solve_assignment,
    solve_kantorovich,
    wasserstein,
)
from .otclassifier import NotFittedError, OTClassifier, OTFitConfig

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "attention_forward",
    "AttentionParams",
    "AttnOTError",
    "build_cost_matrix",
    "ClassLayout",
    "compute_report",
    "Coupling",
    "DatasetTensor",
    "default_config",
    "DimensionMismatchError",
    "DivergenceError",
    "DummyLayout",
    "dump_trajectory",
    "encoder_forward",
    "ExperimentConfig",
    "freeze_mlp",
    "gaussian_wasserstein2",
    "GaussianSpec",
    "ingest_real_csv",
    "load_config",
    "make_dummy_dataset",
    "make_layout",
    "MetricsReport",
    "MLP",
    "NotFittedError",
    "OTClassifier",
    "OTFitConfig",
    "ParameterError",
    "ParseError",
    "PointCloud",
    "push_forward",
    "read_dataset_csv",
    "read_trajectory",
    "rotate_layout",
    "run_experiment",
    "run_pretrained",
    "run_real_data",
    "sample_dataset",
    "solve_assignment",
    "solve_kantorovich",
    "SolverError",
    "standardize",
    "Standardizer",
    "train_full_batch",
    "TrainConfig",
    "TrainingTrace",
    "TrajectoryRecord",
    "TransformerClassifier",
    "wasserstein",
    "write_dataset_csv",
]
