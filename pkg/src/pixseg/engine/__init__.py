from .checkpoint import (
    FORMAT_VERSION,
    CorruptFileError,
    ShapeMismatchError,
    VersionMismatchError,
    load_archive,
    load_model_weights,
    save_archive,
)
from .fp16 import DynamicLossScaler, ScaleUnderflowError
from .parallel import (
    DataParallelGroup,
    DesyncDetectedError,
    data_parallel_step,
    parameter_checksum,
    shard_batch,
)
from .trainer import NonFiniteLossError, StepMetrics, Trainer, freeze_norm_stats

__all__ = [
    "FORMAT_VERSION",
    "CorruptFileError",
    "DataParallelGroup",
    "DesyncDetectedError",
    "DynamicLossScaler",
    "NonFiniteLossError",
    "ScaleUnderflowError",
    "ShapeMismatchError",
    "StepMetrics",
    "Trainer",
    "VersionMismatchError",
    "data_parallel_step",
    "freeze_norm_stats",
    "load_archive",
    "load_model_weights",
    "parameter_checksum",
    "save_archive",
    "shard_batch",
]
