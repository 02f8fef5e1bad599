from .descriptor import DatasetDescriptor, load_descriptor, write_meta
from .folder import CorruptSampleError, FolderDataset, IndexOutOfRangeError
from .loader import IterationLoader
from .sample import Batch, EmptyBatchError, SegSample, collate
from .synthetic import generate_synthetic_dataset
from .transforms import (
    BadPipelineError,
    Normalize,
    Pad,
    RandomCrop,
    RandomFlip,
    Resize,
    apply_pipeline,
    build_pipeline,
)

__all__ = [
    "Batch",
    "BadPipelineError",
    "CorruptSampleError",
    "DatasetDescriptor",
    "EmptyBatchError",
    "FolderDataset",
    "IndexOutOfRangeError",
    "IterationLoader",
    "Normalize",
    "Pad",
    "RandomCrop",
    "RandomFlip",
    "Resize",
    "SegSample",
    "apply_pipeline",
    "build_pipeline",
    "collate",
    "generate_synthetic_dataset",
    "load_descriptor",
    "write_meta",
]
