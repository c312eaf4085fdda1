"""Core module for nsdlab.

Exceptions, shared data classes, format interfaces and registry, run
configuration and seeded random streams.
"""

from .config import RunConfig, load_config, parse_override
from .exceptions import (
    ConfigError,
    ContractViolationError,
    DataError,
    DataFormatError,
    DegenerateSegmentError,
    DimensionError,
    FileOperationError,
    FingerprintMismatchError,
    FormatNotSupportedError,
    NsdLabError,
    OracleCapError,
    RangeError,
    SamplingError,
)
from .interfaces import FormatAdapter
from .registry import FormatRegistry, get_registry, registry
from .seeding import SeedStreams
from .types import (
    BudgetReport,
    BudgetSpec,
    DecodeOptions,
    DistillConfig,
    DistillMethod,
    EvalReport,
    LabeledImages,
    LabelRule,
    ModelFamily,
    ModelSpec,
    TrainConfig,
    TransformKind,
    TransformSpec,
)


__all__ = [
    "BudgetReport",
    "BudgetSpec",
    "ConfigError",
    "ContractViolationError",
    "DataError",
    "DataFormatError",
    "DecodeOptions",
    "DegenerateSegmentError",
    "DimensionError",
    "DistillConfig",
    "DistillMethod",
    "EvalReport",
    "FileOperationError",
    "FingerprintMismatchError",
    "FormatAdapter",
    "FormatNotSupportedError",
    "FormatRegistry",
    "LabelRule",
    "LabeledImages",
    "ModelFamily",
    "ModelSpec",
    "NsdLabError",
    "OracleCapError",
    "RangeError",
    "RunConfig",
    "SamplingError",
    "SeedStreams",
    "TrainConfig",
    "TransformKind",
    "TransformSpec",
    "get_registry",
    "load_config",
    "parse_override",
    "registry",
]
