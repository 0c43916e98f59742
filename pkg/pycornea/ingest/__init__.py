"""
采集数据导入模块：16位图像读写、虹膜掩码、直接最小二乘椭圆拟合与数据集加载
Capture ingestion module: 16-bit image IO, iris masks, direct least-squares ellipse fitting and dataset loading
"""

from .image import as_rgb, load_image_16, load_mask, save_image_16, save_mask, save_preview_8
from .ellipse import EllipseFit, boundary_points, fit_ellipse
from .observation import ellipse_mask, observe_mask, to_observation
from .dataset import CaptureManifest, CorneaDataset

__all__ = [
    "as_rgb",
    "load_image_16",
    "load_mask",
    "save_image_16",
    "save_mask",
    "save_preview_8",
    "EllipseFit",
    "boundary_points",
    "fit_ellipse",
    "ellipse_mask",
    "observe_mask",
    "to_observation",
    "CaptureManifest",
    "CorneaDataset",
]
