from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..geometry.model import CameraIntrinsics
from ..utils.config import dataclass_from_dict
from ..utils.errors import ConfigError

__all__ = [
    "Sphere",
    "Box",
    "SceneSpec",
    "IrisSpec",
    "TrajectorySpec",
    "SynthConfig",
    "default_camera",
    "default_scene",
    "default_iris",
    "default_trajectory",
]

Vec3 = Tuple[float, float, float]


def _check_color(color, name: str):
    if len(color) != 3 or min(color) < 0.0 or max(color) > 1.0:
        raise ValueError(f"{name} color must be 3 values in [0, 1], got {color}")


@dataclass(frozen=True)
class Sphere:
    center: Vec3
    radius: float
    color: Vec3

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"sphere radius must be positive, got {self.radius}")
        _check_color(self.color, "sphere")

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.center) - self.radius

    @property
    def hi(self) -> np.ndarray:
        return np.asarray(self.center) + self.radius


@dataclass(frozen=True)
class Box:
    """
    轴对齐长方体
    Axis-aligned box
    """

    lo: Vec3
    hi: Vec3
    color: Vec3

    def __post_init__(self):
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"box hi must exceed lo on every axis, got {self.lo} - {self.hi}")
        _check_color(self.color, "box")


@dataclass(frozen=True)
class SceneSpec:
    """
    合成场景：球体与轴对齐长方体，平面漫反射着色加环境光
    Synthetic scene: spheres and axis-aligned boxes with flat diffuse shading plus ambient light
    """

    spheres: Tuple[Sphere, ...] = ()
    boxes: Tuple[Box, ...] = ()
    ambient: float = 0.0
    """
    环境光强度，叠加在漫反射颜色上
    Ambient level added to the diffuse color
    """

    def __post_init__(self):
        if not 0.0 <= self.ambient <= 1.0:
            raise ValueError(f"ambient must be in [0, 1], got {self.ambient}")

    @property
    def is_empty(self) -> bool:
        return not self.spheres and not self.boxes

    def bounds(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """
        所有物体的包围盒
        Bounding box of every primitive
        """
        if self.is_empty:
            return None
        los = [s.lo for s in self.spheres] + [np.asarray(b.lo) for b in self.boxes]
        his = [s.hi for s in self.spheres] + [np.asarray(b.hi) for b in self.boxes]
        return np.min(los, axis=0), np.max(his, axis=0)

    def check_inside(self, lo, hi):
        """
        检查所有物体位于给定包围盒内
        Check that every primitive lies inside the given bounding box
        """
        bounds = self.bounds()
        if bounds is None:
            return
        if np.any(bounds[0] < np.asarray(lo)) or np.any(bounds[1] > np.asarray(hi)):
            raise ConfigError(
                f"scene primitives span {bounds[0].tolist()} - {bounds[1].tolist()}, "
                f"outside the bounding box {list(lo)} - {list(hi)}"
            )

    def to_dict(self) -> dict:
        return {
            "spheres": [
                {"center": list(s.center), "radius": s.radius, "color": list(s.color)}
                for s in self.spheres
            ],
            "boxes": [
                {"lo": list(b.lo), "hi": list(b.hi), "color": list(b.color)} for b in self.boxes
            ],
            "ambient": self.ambient,
        }

    @staticmethod
    def from_dict(d: dict) -> "SceneSpec":
        d = dict(d or {})
        spheres = tuple(dataclass_from_dict(Sphere, s, "scene.spheres") for s in d.pop("spheres", []))
        boxes = tuple(dataclass_from_dict(Box, b, "scene.boxes") for b in d.pop("boxes", []))
        rest = dataclass_from_dict(SceneSpec, d, "scene")
        return SceneSpec(spheres, boxes, rest.ambient)


@dataclass(frozen=True)
class IrisSpec:
    """
    虹膜纹理：径向颜色分布（线性插值）加可选的角向扰动
    Iris texture: radial color profile (linearly interpolated) with an optional angular perturbation
    """

    radii: Tuple[float, ...] = (0.0, 0.25, 0.35, 1.0)
    """
    控制点的半径比例，严格递增并覆盖 [0, 1]
    Radius fractions of the control points, strictly increasing and covering [0, 1]
    """
    colors: Tuple[Vec3, ...] = (
        (0.02, 0.02, 0.02),
        (0.02, 0.02, 0.02),
        (0.25, 0.15, 0.08),
        (0.18, 0.11, 0.06),
    )
    angular_amplitude: float = 0.0
    """
    角向扰动的相对幅度
    Relative amplitude of the angular perturbation
    """
    angular_frequency: int = 7

    def __post_init__(self):
        if len(self.radii) != len(self.colors) or len(self.radii) < 2:
            raise ValueError("iris profile needs at least two (radius, color) control points")
        r = np.asarray(self.radii, np.float64)
        if np.any(np.diff(r) <= 0) or r[0] != 0.0 or r[-1] != 1.0:
            raise ValueError(f"iris radii must increase strictly from 0 to 1, got {self.radii}")
        for c in self.colors:
            _check_color(c, "iris")
        if self.angular_amplitude < 0:
            raise ValueError("angular_amplitude must be non-negative")

    @staticmethod
    def uniform(color: Vec3) -> "IrisSpec":
        return IrisSpec((0.0, 1.0), (tuple(color), tuple(color)))

    def color(self, disks: np.ndarray) -> np.ndarray:
        """
        眼盘坐标 (py, px) 处的虹膜颜色
        Iris color at eye-disk coordinates (py, px)

        Returns:
        - np.ndarray: (N, 3)
        """
        disks = np.asarray(disks, np.float64).reshape(-1, 2)
        radius = np.clip(np.hypot(disks[:, 0], disks[:, 1]), 0.0, 1.0)
        colors = np.asarray(self.colors, np.float64)
        out = np.stack([np.interp(radius, self.radii, colors[:, c]) for c in range(3)], axis=-1)
        if self.angular_amplitude > 0:
            theta = np.arctan2(disks[:, 0], disks[:, 1])
            out = out * (1.0 + self.angular_amplitude * np.cos(self.angular_frequency * theta))[:, None]
        return np.clip(out, 0.0, 1.0)

    def to_dict(self) -> dict:
        return {
            "radii": list(self.radii),
            "colors": [list(c) for c in self.colors],
            "angular_amplitude": self.angular_amplitude,
            "angular_frequency": self.angular_frequency,
        }

    @staticmethod
    def from_dict(d: dict) -> "IrisSpec":
        d = dict(d or {})
        if "colors" in d:
            d["colors"] = [tuple(c) for c in d["colors"]]
        return dataclass_from_dict(IrisSpec, d, "iris")


@dataclass(frozen=True)
class TrajectorySpec:
    """
    角膜运动轨迹：各帧基底圆心（毫米，相机坐标系）与注视方向
    Cornea trajectory: per-frame limbus center (mm, camera frame) and gaze direction
    """

    centers: Tuple[Vec3, ...]
    gazes: Tuple[Vec3, ...]

    def __post_init__(self):
        if len(self.centers) != len(self.gazes) or len(self.centers) == 0:
            raise ValueError("trajectory needs one gaze per center and at least one frame")
        c = np.asarray(self.centers, np.float64)
        g = np.asarray(self.gazes, np.float64)
        if np.any(c[:, 2] <= 0):
            raise ValueError("every cornea must lie in front of the camera")
        g = g / np.linalg.norm(g, axis=-1, keepdims=True)
        to_camera = -c / np.linalg.norm(c, axis=-1, keepdims=True)
        cos = np.sum(g * to_camera, axis=-1)
        if np.any(cos < np.cos(np.radians(60.0))):
            raise ValueError("every cornea must face the camera within 60 degrees")

    @property
    def frame_count(self) -> int:
        return len(self.centers)

    def to_dict(self) -> dict:
        return {
            "centers": [list(c) for c in self.centers],
            "gazes": [list(g) for g in self.gazes],
        }

    @staticmethod
    def from_dict(d: dict) -> "TrajectorySpec":
        d = dict(d or {})
        for k in ("centers", "gazes"):
            if k in d:
                d[k] = [tuple(v) for v in d[k]]
        return dataclass_from_dict(TrajectorySpec, d, "trajectory")


def default_camera() -> CameraIntrinsics:
    return CameraIntrinsics(1600.0, 200.0, 150.0, 400, 300)


def default_scene() -> SceneSpec:
    """
    默认场景：一个红色球体与一个蓝绿色长方体，位于相机与人之间、偏离视线
    Default scene: a red sphere and a teal box between the camera and the subject, off the line of sight
    """
    return SceneSpec(
        spheres=(Sphere((-90.0, -30.0, 300.0), 60.0, (0.85, 0.1, 0.08)),),
        boxes=(Box((50.0, 10.0, 250.0), (110.0, 70.0, 310.0), (0.1, 0.6, 0.55)),),
        ambient=0.05,
    )


def default_iris() -> IrisSpec:
    return IrisSpec()


def default_trajectory(frames: int = 8, depth: float = 550.0) -> TrajectorySpec:
    """
    默认轨迹：头部在相机前水平移动，视线在相机方向附近小幅摆动
    Default trajectory: the head moves sideways in front of the camera while the gaze wanders near the camera

    Args:
    - frames (int): 帧数。Frame count.
    - depth (float): 平均深度（毫米）。Mean depth (mm).
    """
    centers, gazes = [], []
    for i in range(frames):
        s = i / max(frames - 1, 1)
        center = np.array(
            [-45.0 + 90.0 * s, 15.0 * np.sin(2.0 * np.pi * s), depth + 30.0 * np.cos(np.pi * s)]
        )
        to_camera = -center / np.linalg.norm(center)
        # gaze wobble of up to ~8 degrees around the camera direction
        wobble = np.radians(8.0) * np.array([np.sin(3.0 * i), np.cos(5.0 * i), 0.0])
        gaze = to_camera + wobble
        centers.append(tuple(float(v) for v in center))
        gazes.append(tuple(float(v) for v in gaze / np.linalg.norm(gaze)))
    return TrajectorySpec(tuple(centers), tuple(gazes))


@dataclass(frozen=True)
class SynthConfig:
    """
    合成数据集的完整设置
    Complete settings of a synthetic dataset
    """

    camera: CameraIntrinsics = field(default_factory=default_camera)
    scene: SceneSpec = field(default_factory=default_scene)
    iris: IrisSpec = field(default_factory=default_iris)
    trajectory: TrajectorySpec = field(default_factory=default_trajectory)
    noise: float = 0.0
    """
    半径噪声水平 sigma：r_img (1 + sigma u)，u 服从 [-1, 1] 均匀分布
    Radius-noise level sigma: r_img (1 + sigma u) with u uniform in [-1, 1]
    """
    seed: int = 0
    skin: Vec3 = (0.8, 0.6, 0.5)

    def __post_init__(self):
        if self.noise < 0:
            raise ValueError(f"noise level must be non-negative, got {self.noise}")
        _check_color(self.skin, "skin")

    def to_dict(self) -> dict:
        return {
            "camera": self.camera.to_dict(),
            "scene": self.scene.to_dict(),
            "iris": self.iris.to_dict(),
            "trajectory": self.trajectory.to_dict(),
            "noise": self.noise,
            "seed": self.seed,
            "skin": list(self.skin),
        }

    @staticmethod
    def from_sections(config: dict) -> "SynthConfig":
        """
        由项目配置文件的 camera/scene/iris/trajectory/synth 节构造
        Build from the camera/scene/iris/trajectory/synth sections of a project config
        """
        try:
            camera = (
                CameraIntrinsics.from_dict(config["camera"]) if "camera" in config else default_camera()
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"invalid camera config: {e}") from e
        scene = SceneSpec.from_dict(config["scene"]) if "scene" in config else default_scene()
        iris = IrisSpec.from_dict(config["iris"]) if "iris" in config else default_iris()
        trajectory = (
            TrajectorySpec.from_dict(config["trajectory"])
            if "trajectory" in config
            else default_trajectory()
        )
        synth = dict(config.get("synth") or {})
        unknown = sorted(set(synth) - {"noise", "seed", "skin"})
        if unknown:
            raise ConfigError(f"unknown keys in 'synth': {', '.join(unknown)}")
        try:
            return SynthConfig(
                camera=camera,
                scene=scene,
                iris=iris,
                trajectory=trajectory,
                noise=float(synth.get("noise", 0.0)),
                seed=int(synth.get("seed", 0)),
                skin=tuple(synth.get("skin", (0.8, 0.6, 0.5))),
            )
        except ValueError as e:
            raise ConfigError(f"invalid synth config: {e}") from e
