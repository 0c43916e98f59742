from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..geometry.camera import pixel_directions, pixel_grid_rays
from ..geometry.cornea import eye_projection_many, intersect_many, reflect_many
from ..geometry.model import CameraIntrinsics, CorneaModel, CorneaObservation, RigidPose
from ..ingest.ellipse import EllipseFit, fit_ellipse
from ..ingest.observation import to_observation
from .specs import IrisSpec, SceneSpec
from .tracer import trace

__all__ = ["FrameRender", "project_limbus", "render_frame", "render_ground_truth_view"]

_RIM_POINTS = 720


@dataclass
class FrameRender:
    """
    一帧合成眼部图像及其精确观测
    One synthetic eye image with its exact observation
    """

    image: np.ndarray
    """
    (H, W, 3) uint16 图像
    (H, W, 3) uint16 image
    """
    observation: CorneaObservation
    fit: EllipseFit

    @property
    def linear(self) -> np.ndarray:
        return self.image.astype(np.float64) / 65535.0


def project_limbus(
    model: CorneaModel, pose: RigidPose, intr: CameraIntrinsics, frame: int = 0
) -> EllipseFit:
    """
    将角膜基底圆投影到图像并拟合椭圆，得到精确的投影椭圆参数
    Project the limbus (base circle) into the image and fit the exact projected ellipse

    Args:
    - model (CorneaModel): 角膜模型。Cornea model.
    - pose (RigidPose): 角膜位姿。Cornea pose.
    - intr (CameraIntrinsics): 相机内参。Camera intrinsics.

    Returns:
    - EllipseFit: 投影椭圆。Projected ellipse.
    """
    phi = np.linspace(0.0, 2.0 * np.pi, _RIM_POINTS, endpoint=False)
    rim = np.stack(
        [
            model.base_radius * np.cos(phi),
            model.base_radius * np.sin(phi),
            np.full_like(phi, model.apex_to_base),
        ],
        axis=-1,
    )
    world = pose.apply(rim)
    if np.any(world[:, 2] <= 0):
        raise ValueError(f"frame {frame}: cornea lies behind the camera")
    uvw = world @ intr.matrix.T
    uv = uvw[:, :2] / uvw[:, 2:]
    if (
        uv[:, 0].min() < 0
        or uv[:, 1].min() < 0
        or uv[:, 0].max() > intr.width - 1
        or uv[:, 1].max() > intr.height - 1
    ):
        raise ValueError(f"frame {frame}: cornea projects outside the {intr.width}x{intr.height} image")
    return fit_ellipse(uv)


def render_frame(
    scene: SceneSpec,
    iris: IrisSpec,
    model: CorneaModel,
    pose: RigidPose,
    intr: CameraIntrinsics,
    frame: int = 0,
    skin: Tuple[float, float, float] = (0.8, 0.6, 0.5),
) -> FrameRender:
    """
    渲染一帧眼部图像：角膜像素为虹膜纹理与场景反射的叠加，其余为肤色
    Render one eye image: cornea pixels add the scene reflection onto the iris texture, the rest is skin

    Args:
    - scene (SceneSpec): 场景。Scene.
    - iris (IrisSpec): 虹膜纹理。Iris texture.
    - model (CorneaModel): 角膜模型。Cornea model.
    - pose (RigidPose): 角膜位姿（规范坐标系到相机坐标系）。Cornea pose (canonical to camera frame).
    - intr (CameraIntrinsics): 相机内参，相机位于原点。Camera intrinsics, camera at the origin.
    - frame (int): 帧号。Frame index.
    - skin (Tuple[float, float, float]): 非角膜像素颜色。Color of non-cornea pixels.

    Returns:
    - FrameRender: 16位图像、精确观测与椭圆。16-bit image, exact observation and ellipse.
    """
    fit = project_limbus(model, pose, intr, frame)
    shape = (intr.height, intr.width)
    obs = to_observation(fit, frame, shape=shape)

    ys, xs = np.nonzero(obs.mask)
    disks = eye_projection_many(obs, ys, xs)
    d = pixel_directions(intr, ys, xs)
    hit, _, points, normals = intersect_many(model, np.zeros_like(d), d, pose)
    hit &= np.hypot(disks[:, 0], disks[:, 1]) <= 1.0
    facing = np.zeros_like(hit)
    facing[hit] = np.sum(d[hit] * normals[hit], axis=-1) < 0.0
    hit &= facing
    ys, xs, disks = ys[hit], xs[hit], disks[hit]
    reflected = reflect_many(d[hit], normals[hit])
    reflected /= np.linalg.norm(reflected, axis=-1, keepdims=True)
    _, _, radiance = trace(scene, points[hit], reflected)

    image = np.empty(shape + (3,), np.float64)
    image[...] = skin
    image[ys, xs] = np.clip(iris.color(disks) + radiance, 0.0, 1.0)

    mask = np.zeros(shape, bool)
    mask[ys, xs] = True
    obs.mask = mask
    quantized = np.round(image * 65535.0).astype(np.uint16)
    return FrameRender(quantized, obs, fit)


def render_ground_truth_view(
    scene: SceneSpec, intr: CameraIntrinsics, pose: RigidPose
) -> np.ndarray:
    """
    从任意相机直接渲染场景（不经反射），作为新视角评估的参考图像
    Render the scene directly from an arbitrary camera (no reflection), the reference for novel-view evaluation

    Args:
    - scene (SceneSpec): 场景。Scene.
    - intr (CameraIntrinsics): 相机内参。Camera intrinsics.
    - pose (RigidPose): 相机到世界的变换。Camera-to-world transform.

    Returns:
    - np.ndarray: (H, W, 3) [0, 1] 图像。(H, W, 3) image in [0, 1].
    """
    origins, directions = pixel_grid_rays(intr, pose)
    _, _, radiance = trace(scene, origins, directions)
    return radiance.reshape(intr.height, intr.width, 3)
