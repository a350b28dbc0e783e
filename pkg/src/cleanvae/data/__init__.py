from .core import (
    SPLIT_NAMES,
    TEST,
    TRAIN,
    VAL,
    CleanDataset,
    ConfigError,
    CorruptedDataset,
    ErrorClass,
    TrustedSet,
)
from .shapes import generate_shapes
from .corruption import InsufficientClassMembers, build_error_classes, corrupt, sample_trusted_set
from .formats import FormatError, load_idx, load_matrix, read_idx, write_idx
from .bundle import load_bundle, save_bundle

__all__ = [
    "SPLIT_NAMES", "TRAIN", "VAL", "TEST",
    "CleanDataset", "CorruptedDataset", "ErrorClass", "TrustedSet",
    "ConfigError", "FormatError", "InsufficientClassMembers",
    "generate_shapes", "build_error_classes", "corrupt", "sample_trusted_set",
    "load_idx", "load_matrix", "read_idx", "write_idx",
    "save_bundle", "load_bundle",
]
