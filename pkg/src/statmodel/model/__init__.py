"""Model assembly, evaluation, serialization, export and reporting."""

from .core import (
    FIXED_TIMESTAMP,
    SCHEMA_VERSION,
    EvaluationResult,
    FunctionModel,
    Model,
    ModelCallSite,
    ParamEntry,
    build_model,
    evaluate,
)
from .emit import emit_python
from .report import DistributionReport, IntensityReport, distribution_report, intensity_report, report
from .serialize import deserialize, model_to_dict, serialize

__all__ = [
    "DistributionReport",
    "EvaluationResult",
    "FIXED_TIMESTAMP",
    "FunctionModel",
    "IntensityReport",
    "Model",
    "ModelCallSite",
    "ParamEntry",
    "SCHEMA_VERSION",
    "build_model",
    "deserialize",
    "distribution_report",
    "emit_python",
    "evaluate",
    "intensity_report",
    "model_to_dict",
    "report",
    "serialize",
]
