"""
实用工具：异常、JSON配置、图像质量指标与指标报告
utilities: errors, JSON configuration, image-quality metrics and metrics reports
"""

from .errors import (
    BackwardStateError,
    CheckpointError,
    ConfigError,
    CorneaError,
    EllipseFitError,
    FieldDomainError,
    GeometryError,
    GrazingError,
    ImageIOError,
    MissingGroundTruthError,
    OutOfSectionError,
    OutputIOError,
    OutsideCorneaError,
    SurfacePreconditionError,
    TrainingError,
)
from .config import config_hash, dataclass_from_dict, dataclass_to_dict, load_json
from .metrics import PSNR_CAP_DB, psnr, ssim
from .report import append_report, format_table, read_reports, write_table

__all__ = [
    "BackwardStateError",
    "CheckpointError",
    "ConfigError",
    "CorneaError",
    "EllipseFitError",
    "FieldDomainError",
    "GeometryError",
    "GrazingError",
    "ImageIOError",
    "MissingGroundTruthError",
    "OutOfSectionError",
    "OutputIOError",
    "OutsideCorneaError",
    "SurfacePreconditionError",
    "TrainingError",
    "config_hash",
    "dataclass_from_dict",
    "dataclass_to_dict",
    "load_json",
    "PSNR_CAP_DB",
    "psnr",
    "ssim",
    "append_report",
    "format_table",
    "write_table",
    "read_reports",
]
