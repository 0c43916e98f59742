from typing import List, Optional, Tuple

import cv2
import numpy as np

from .model import CameraIntrinsics, RigidPose

__all__ = ["pixel_directions", "pixel_grid_rays", "look_at", "orbit_cameras"]


def pixel_directions(intr: CameraIntrinsics, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """
    相机坐标系下像素中心的单位视线方向
    Unit viewing directions through pixel centers in the camera frame

    Args:
    - intr (CameraIntrinsics): 相机内参。Camera intrinsics.
    - ys (np.ndarray): 像素行坐标。Pixel rows.
    - xs (np.ndarray): 像素列坐标。Pixel columns.

    Returns:
    - np.ndarray: (..., 3) 单位方向。(..., 3) unit directions.
    """
    K_inv = np.linalg.inv(intr.matrix)
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    z = np.ones_like(xs)
    xyz = np.concatenate([xs[..., None], ys[..., None], z[..., None]], axis=-1)
    xyz = xyz @ K_inv.T
    return xyz / np.linalg.norm(xyz, axis=-1, keepdims=True)


def pixel_grid_rays(
    intr: CameraIntrinsics, pose: Optional[RigidPose] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    整幅图像的世界坐标系光线
    World-frame rays for every pixel of the image

    Args:
    - intr (CameraIntrinsics): 相机内参。Camera intrinsics.
    - pose (RigidPose, optional): 相机到世界的变换，默认相机位于原点。Camera-to-world transform, camera at the origin by default.

    Returns:
    - origins (np.ndarray): (H*W, 3)
    - directions (np.ndarray): (H*W, 3)，按行优先顺序。Row-major order.
    """
    if pose is None:
        pose = RigidPose()
    x = np.arange(intr.width)
    y = np.arange(intr.height)
    x, y = np.meshgrid(x, y)
    d = pixel_directions(intr, y.reshape(-1), x.reshape(-1))
    d = pose.rotate(d)
    o = np.broadcast_to(pose.translation, d.shape).copy()
    return o, d


def look_at(eye, target, up=(0.0, -1.0, 0.0)) -> RigidPose:
    """
    构造位于 eye、朝向 target 的相机位姿（相机 +z 为视线方向，+y 朝下）
    Camera pose at `eye` looking at `target` (camera +z forward, +y down)

    Args:
    - eye: 相机中心（毫米）。Camera center (mm).
    - target: 注视点（毫米）。Point to look at (mm).
    - up: 世界坐标系中的上方向。Up direction in world frame.

    Returns:
    - RigidPose: 相机到世界的变换。Camera-to-world transform.
    """
    eye = np.asarray(eye, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - eye
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, np.asarray(up, dtype=np.float64))
    if np.linalg.norm(right) < 1e-9:
        raise ValueError("up direction is parallel to the viewing direction")
    right /= np.linalg.norm(right)
    down = np.cross(forward, right)
    R = np.stack([right, down, forward], axis=1)
    return RigidPose(R, eye)


def orbit_cameras(
    target, start, count: int, span: float = 60.0, pitch: float = 0.0
) -> List[RigidPose]:
    """
    绕 target 的圆弧上均匀排布、朝向 target 的相机
    Cameras spread evenly on an arc around `target`, all looking at it

    Args:
    - target: 注视点与圆弧中心（毫米）。Point looked at and arc center (mm).
    - start: 圆弧中点处的相机位置（毫米）。Camera position at the middle of the arc (mm).
    - count (int): 相机数量。Number of cameras.
    - span (float): 水平方向总张角（度）。Total horizontal span (degrees).
    - pitch (float): 俯仰偏移（度）。Pitch offset (degrees).

    Returns:
    - List[RigidPose]: 相机到世界的变换。Camera-to-world transforms.
    """
    if count < 1:
        raise ValueError(f"orbit needs at least one camera, got {count}")
    target = np.asarray(target, dtype=np.float64)
    arm = np.asarray(start, dtype=np.float64) - target
    y_axis = np.array([0.0, 1.0, 0.0])
    x_axis = np.array([1.0, 0.0, 0.0])
    if count == 1:
        headings = np.array([0.0])
    else:
        headings = np.linspace(-0.5 * span, 0.5 * span, count)
    cams = []
    for heading in headings:
        R1, _ = cv2.Rodrigues(y_axis * np.radians(heading))
        R2, _ = cv2.Rodrigues(np.dot(R1, x_axis) * np.radians(pitch))
        cams.append(look_at(target + (R2 @ R1) @ arm, target))
    return cams
