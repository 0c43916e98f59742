"""
合成数据模块：已知场景与虹膜的眼部图像正向渲染器，以及带半径噪声的数据集生成
Synthetic data module: forward renderer of eye images for a known scene and iris, and dataset generation with radius noise
"""

from .specs import (
    Box,
    IrisSpec,
    SceneSpec,
    Sphere,
    SynthConfig,
    TrajectorySpec,
    default_camera,
    default_iris,
    default_scene,
    default_trajectory,
)
from .tracer import trace
from .render import FrameRender, project_limbus, render_frame, render_ground_truth_view
from .dataset import GroundTruth, corrupt_radii, load_ground_truth, make_dataset

__all__ = [
    "Box",
    "IrisSpec",
    "SceneSpec",
    "Sphere",
    "SynthConfig",
    "TrajectorySpec",
    "default_camera",
    "default_iris",
    "default_scene",
    "default_trajectory",
    "trace",
    "FrameRender",
    "project_limbus",
    "render_frame",
    "render_ground_truth_view",
    "GroundTruth",
    "corrupt_radii",
    "load_ground_truth",
    "make_dataset",
]
