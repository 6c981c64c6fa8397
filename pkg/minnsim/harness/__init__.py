from .datasets import (
    SYNTHETIC_SHAPES,
    Dataset,
    load_csv_dataset,
    load_mnist_idx,
    minmax_scale,
    standardize,
    stride_indices,
    synthetic_dataset,
)
from .experiments import (
    build_minn,
    build_stack,
    config_hash,
    load_config,
    load_datasets,
    prepare,
    read_metrics,
    run_experiment,
    stage,
    sweep,
    write_manifest,
)
from .forms import EXPERIMENT_KINDS, AlignSpec, DatasetSpec, ElmSpec, ExperimentConfig, ModelSpec, SimStackSpec
