from dataclasses import dataclass
from typing import List

import numpy as np

from ..geometry.model import ReflectedRays, RigidPose

__all__ = ["TrainingData", "POSE_SOURCES"]

POSE_SOURCES = ("placed", "ground_truth")


@dataclass
class TrainingData:
    """
    训练所需的全部反射光线与观测颜色
    Every reflected ray and observed color needed for training

    光线的 frames 字段为 0..F-1 的行号，原始帧号保存在 frame_ids 中。
    Ray `frames` hold row indices 0..F-1; the original frame numbers live in `frame_ids`.
    """

    rays: ReflectedRays
    colors: np.ndarray
    """
    (N, 3) 观测颜色，取值 [0, 1]
    (N, 3) observed colors in [0, 1]
    """
    poses: List[RigidPose]
    """
    构建光线所用的各帧角膜位姿
    Per-frame cornea poses the rays were built with
    """
    frame_ids: List[int]
    pose_source: str = "placed"
    """
    位姿来源："placed" 由观测放置，"ground_truth" 取合成真值
    Where the poses came from: "placed" from the observations, "ground_truth" from the synthetic truth
    """

    def __post_init__(self):
        if self.pose_source not in POSE_SOURCES:
            raise ValueError(f"pose_source must be one of {POSE_SOURCES}, got {self.pose_source!r}")
        self.colors = np.asarray(self.colors, np.float64).reshape(-1, 3)
        if len(self.colors) != len(self.rays):
            raise ValueError(f"{len(self.rays)} rays but {len(self.colors)} colors")
        if len(self.poses) != len(self.frame_ids):
            raise ValueError("one pose per frame is required")

    @property
    def n_frames(self) -> int:
        return len(self.frame_ids)

    @property
    def pivots(self) -> np.ndarray:
        """
        (F, 3) 各帧初始顶点位置，位姿修正绕其旋转
        (F, 3) initial apex position per frame, the pose corrections rotate about it
        """
        if not self.poses:
            return np.zeros((0, 3), np.float64)
        return np.stack([p.translation for p in self.poses])
