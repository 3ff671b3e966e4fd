"""Quantized ANN to multi-spike SNN conversion."""

from ._core import (
    AifParams,
    AnnModel,
    DimensionError,
    Error,
    IoError,
    NumericError,
    QuantParams,
    SnnModel,
    StructureError,
    TrainingError,
    ValidationError,
    convert,
    entropy_bn,
    entropy_grid,
    entropy_pqa,
    entropy_relu,
    fold_batchnorm,
    power,
    pqa_forward,
    pqa_indices,
    qa_forward,
    regime,
    run,
    train_gaussians,
    transfer_pqa_to_aif,
    verify,
)

__version__ = "0.1.0"
