import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Tuple

import numpy as np

__all__ = [
    "CorneaModel",
    "CameraIntrinsics",
    "CorneaObservation",
    "Ray",
    "ReflectedRay",
    "ReflectedRays",
    "RigidPose",
]

QUOTED_APEX_TO_BASE_MM = 2.18
"""
文献中给出的顶点到基底距离（约2.18 mm）。由方程直接求得约2.0776 mm，二者不一致，本库采用求解值。
Apex-to-base distance quoted in the literature (about 2.18 mm). Solving the ellipsoid equation with the
same constants gives about 2.0776 mm; the solved value is what this library uses.
"""


@dataclass(frozen=True)
class CorneaModel:
    """
    角膜椭球模型 (1-e)z^2 - 2Rz + r^2 = 0，顶点位于原点，开口朝 +z
    Cornea ellipsoid model (1-e)z^2 - 2Rz + r^2 = 0, apex at the origin, opening toward +z
    """

    eccentricity: float = 0.5
    """
    离心率 e（无量纲）
    Eccentricity e (dimensionless)
    """
    apex_radius: float = 7.8
    """
    顶点曲率半径 R（毫米）
    Radius of curvature at the apex R (mm)
    """
    base_radius: float = 5.5
    """
    截面基底半径 r_L（毫米）
    Radius of the section base r_L (mm)
    """

    def __post_init__(self):
        if not 0.0 < self.eccentricity < 1.0:
            raise ValueError(f"eccentricity must be in (0, 1), got {self.eccentricity}")
        if self.apex_radius <= 0.0:
            raise ValueError(f"apex_radius must be positive, got {self.apex_radius}")
        if self.base_radius <= 0.0:
            raise ValueError(f"base_radius must be positive, got {self.base_radius}")
        if self.apex_radius**2 < (1.0 - self.eccentricity) * self.base_radius**2:
            raise ValueError("base_radius exceeds the ellipsoid's widest section")

    @property
    def apex_to_base(self) -> float:
        """
        顶点到基底的距离 t_b（毫米），为 r = r_L 时方程较小的正根
        Apex-to-base distance t_b (mm): the smaller positive root of the surface equation at r = r_L
        """
        k = 1.0 - self.eccentricity
        r2 = self.base_radius**2
        return r2 / (self.apex_radius + math.sqrt(self.apex_radius**2 - k * r2))

    def residual(self, points: np.ndarray) -> np.ndarray:
        """
        椭球隐式方程残差
        Implicit surface residual (1-e)z^2 - 2Rz + x^2 + y^2
        """
        p = np.asarray(points, dtype=np.float64)
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        return (
            (1.0 - self.eccentricity) * z * z
            - 2.0 * self.apex_radius * z
            + x * x
            + y * y
        )

    def to_dict(self) -> dict:
        return {
            "eccentricity": self.eccentricity,
            "apex_radius": self.apex_radius,
            "base_radius": self.base_radius,
        }


@dataclass(frozen=True)
class CameraIntrinsics:
    """
    针孔相机内参（像素），像素中心位于整数坐标
    Pinhole camera intrinsics in pixels, pixel centers at integer coordinates
    """

    focal_length: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.focal_length <= 0:
            raise ValueError(f"focal_length must be positive, got {self.focal_length}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"invalid image size {self.width}x{self.height}")
        if not (0 <= self.cx <= self.width - 1 and 0 <= self.cy <= self.height - 1):
            raise ValueError(
                f"principal point ({self.cx}, {self.cy}) outside image "
                f"{self.width}x{self.height}"
            )

    @property
    def matrix(self) -> np.ndarray:
        """
        内参矩阵 K
        Intrinsic matrix K
        """
        return np.array(
            [
                [self.focal_length, 0.0, self.cx],
                [0.0, self.focal_length, self.cy],
                [0.0, 0.0, 1.0],
            ],
            np.float64,
        )

    @staticmethod
    def from_fov(width: int, height: int, fov: float) -> "CameraIntrinsics":
        """
        由水平视场角（度）构造内参
        Build intrinsics from a horizontal field of view (degrees)
        """
        f = 0.5 * width / np.tan(0.5 * fov / 180.0 * np.pi)
        return CameraIntrinsics(float(f), (width - 1) / 2.0, (height - 1) / 2.0, width, height)

    def to_dict(self) -> dict:
        return {
            "focal_length": self.focal_length,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
        }

    @staticmethod
    def from_dict(d: dict) -> "CameraIntrinsics":
        return CameraIntrinsics(
            float(d["focal_length"]),
            float(d["cx"]),
            float(d["cy"]),
            int(d["width"]),
            int(d["height"]),
        )


@dataclass
class CorneaObservation:
    """
    单帧的角膜观测：投影椭圆与遮挡掩码
    Per-frame cornea observation: projected ellipse and occlusion mask
    """

    cx: float
    cy: float
    r_img: float
    """
    投影椭圆的长半轴（像素）
    Major radius of the projected ellipse (pixels)
    """
    frame: int
    mask: Optional[np.ndarray] = None
    """
    全图大小的布尔掩码，True 表示可见的角膜像素
    Full-frame boolean mask, True marks visible cornea pixels
    """
    minor: Optional[float] = None
    """
    短半轴（仅作元数据）
    Minor radius (metadata only)
    """
    angle: Optional[float] = None
    """
    长轴方向（弧度，仅作元数据）
    Major-axis direction in radians (metadata only)
    """

    def __post_init__(self):
        if not self.r_img > 0:
            raise ValueError(f"r_img must be positive, got {self.r_img}")

    def to_dict(self) -> dict:
        d = {"frame": self.frame, "cx": self.cx, "cy": self.cy, "r_img": self.r_img}
        if self.minor is not None:
            d["minor"] = self.minor
        if self.angle is not None:
            d["angle"] = self.angle
        return d

    @staticmethod
    def from_dict(d: dict, mask: Optional[np.ndarray] = None) -> "CorneaObservation":
        return CorneaObservation(
            cx=float(d["cx"]),
            cy=float(d["cy"]),
            r_img=float(d["r_img"]),
            frame=int(d["frame"]),
            mask=mask,
            minor=d.get("minor"),
            angle=d.get("angle"),
        )


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise ValueError("ray direction must be unit length")
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.float64))
        object.__setattr__(self, "direction", d)


@dataclass(frozen=True)
class ReflectedRay:
    """
    角膜反射光线
    Ray reflected off the cornea
    """

    origin: np.ndarray
    direction: np.ndarray
    normal: np.ndarray
    pixel: Tuple[int, int]
    """
    源像素 (y, x)
    Source pixel (y, x)
    """
    disk: Tuple[float, float]
    """
    眼盘坐标 p
    Eye-disk coordinate p
    """
    frame: int = 0


@dataclass
class ReflectedRays:
    """
    按列存储的一组反射光线，训练时整体参与向量化计算
    Column-stored bundle of reflected rays, processed as a whole during training
    """

    origins: np.ndarray
    directions: np.ndarray
    normals: np.ndarray
    pixels: np.ndarray
    disks: np.ndarray
    frames: np.ndarray

    @staticmethod
    def empty() -> "ReflectedRays":
        z3 = np.zeros((0, 3), np.float64)
        return ReflectedRays(
            z3,
            z3.copy(),
            z3.copy(),
            np.zeros((0, 2), np.int64),
            np.zeros((0, 2), np.float64),
            np.zeros((0,), np.int64),
        )

    @staticmethod
    def concatenate(bundles) -> "ReflectedRays":
        bundles = list(bundles)
        if len(bundles) == 0:
            return ReflectedRays.empty()
        return ReflectedRays(
            np.concatenate([b.origins for b in bundles]),
            np.concatenate([b.directions for b in bundles]),
            np.concatenate([b.normals for b in bundles]),
            np.concatenate([b.pixels for b in bundles]),
            np.concatenate([b.disks for b in bundles]),
            np.concatenate([b.frames for b in bundles]),
        )

    def subset(self, idx) -> "ReflectedRays":
        return ReflectedRays(
            self.origins[idx],
            self.directions[idx],
            self.normals[idx],
            self.pixels[idx],
            self.disks[idx],
            self.frames[idx],
        )

    def __len__(self) -> int:
        return int(self.origins.shape[0])

    def __getitem__(self, i: int) -> ReflectedRay:
        return ReflectedRay(
            origin=self.origins[i],
            direction=self.directions[i],
            normal=self.normals[i],
            pixel=(int(self.pixels[i, 0]), int(self.pixels[i, 1])),
            disk=(float(self.disks[i, 0]), float(self.disks[i, 1])),
            frame=int(self.frames[i]),
        )

    def __iter__(self) -> Iterator[ReflectedRay]:
        for i in range(len(self)):
            yield self[i]


@dataclass(frozen=True)
class RigidPose:
    """
    刚体变换 x_world = R x_local + t
    Rigid transform x_world = R x_local + t
    """

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def apply_inverse(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.translation) @ self.rotation

    def rotate(self, vectors: np.ndarray) -> np.ndarray:
        return np.asarray(vectors, dtype=np.float64) @ self.rotation.T

    def rotate_inverse(self, vectors: np.ndarray) -> np.ndarray:
        return np.asarray(vectors, dtype=np.float64) @ self.rotation

    def to_dict(self) -> dict:
        return {
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "RigidPose":
        return RigidPose(np.array(d["rotation"]), np.array(d["translation"]))
