"""
Schemas module initialization.
"""
from fvsggm.schemas.model_file import ModelFile, ModelMetadata, load_model
from fvsggm.schemas.report import (
    RecoveryReportResponse,
    RecoveryRunResponse,
    SensitivityReportResponse,
    SweepMetadata,
)

__all__ = [
    "ModelFile",
    "ModelMetadata",
    "load_model",
    "RecoveryReportResponse",
    "RecoveryRunResponse",
    "SensitivityReportResponse",
    "SweepMetadata",
]
