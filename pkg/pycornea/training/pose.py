from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np

from ..geometry.model import ReflectedRay, ReflectedRays, RigidPose
from ..geometry.so3 import so3_exp, so3_exp_derivatives

__all__ = ["PoseDelta", "PoseTape", "apply_pose", "apply_poses", "apply_poses_backward"]


@dataclass
class PoseDelta:
    """
    单帧角膜位姿修正量：旋转向量与平移（毫米），绕支点 c 作用
    Per-frame cornea pose correction: rotation vector and translation (mm), acting about a pivot c

    x' = R (x - c) + c + t
    """

    twist: np.ndarray = field(default_factory=lambda: np.zeros(6))
    """
    (6,) 前3维为旋转向量，后3维为平移（毫米）
    (6,) first three entries are the rotation vector, last three the translation (mm)
    """
    pivot: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.twist = np.asarray(self.twist, np.float64).reshape(6)
        self.pivot = np.asarray(self.pivot, np.float64).reshape(3)

    @property
    def rotation(self) -> np.ndarray:
        return so3_exp(self.twist[:3])

    @property
    def translation(self) -> np.ndarray:
        return self.twist[3:].copy()

    def as_pose(self) -> RigidPose:
        """
        等价的刚体变换
        Equivalent rigid transform
        """
        R = self.rotation
        return RigidPose(R, self.pivot - R @ self.pivot + self.twist[3:])

    def compose(self, pose: RigidPose) -> RigidPose:
        """
        将修正量作用于角膜位姿（规范坐标系到世界坐标系）
        Apply the correction to a canonical-to-world cornea pose
        """
        delta = self.as_pose()
        return RigidPose(delta.rotation @ pose.rotation, delta.apply(pose.translation))


def apply_pose(
    delta: PoseDelta, ray: Union[ReflectedRay, ReflectedRays]
) -> Union[ReflectedRay, ReflectedRays]:
    """
    将位姿修正作用于预计算的反射光线
    Apply a pose correction to precomputed reflected rays

    Args:
    - delta (PoseDelta): 位姿修正。Pose correction.
    - ray (Union[ReflectedRay, ReflectedRays]): 单条或一组光线。One ray or a bundle.

    Returns:
    - Union[ReflectedRay, ReflectedRays]: 变换后的光线，方向重新归一化。Transformed rays with renormalized directions.
    """
    R = delta.rotation
    if isinstance(ray, ReflectedRay):
        d = R @ ray.direction
        return ReflectedRay(
            origin=R @ (ray.origin - delta.pivot) + delta.pivot + delta.twist[3:],
            direction=d / np.linalg.norm(d),
            normal=R @ ray.normal,
            pixel=ray.pixel,
            disk=ray.disk,
            frame=ray.frame,
        )
    bundle = ReflectedRays(
        ray.origins, ray.directions, ray.normals, ray.pixels, ray.disks,
        np.zeros(len(ray), np.int64),
    )
    out, _ = apply_poses(delta.twist[None, :], delta.pivot[None, :], bundle)
    out.frames = ray.frames
    return out


@dataclass
class PoseTape:
    """
    批量位姿变换的前向记录
    Forward record of a batched pose transform
    """

    twists: np.ndarray
    pivots: np.ndarray
    rays: ReflectedRays
    direction_norm: np.ndarray
    directions: np.ndarray


def apply_poses(
    twists: np.ndarray, pivots: np.ndarray, rays: ReflectedRays
) -> Tuple[ReflectedRays, PoseTape]:
    """
    按帧索引对一组光线施加各自的位姿修正
    Apply each ray's per-frame pose correction, looked up by its frame index

    Args:
    - twists (np.ndarray): (F, 6) 各帧修正量。(F, 6) per-frame corrections.
    - pivots (np.ndarray): (F, 3) 各帧支点。(F, 3) per-frame pivots.
    - rays (ReflectedRays): frames 字段为 0..F-1 的行号。Rays whose frames are row indices 0..F-1.

    Returns:
    - ReflectedRays: 变换后的光线。Transformed rays.
    - PoseTape: 反向传播记录。Record for the backward pass.
    """
    origins = np.empty_like(rays.origins)
    directions = np.empty_like(rays.directions)
    normals = np.empty_like(rays.normals)
    norms = np.empty(len(rays), np.float64)
    for f in np.unique(rays.frames):
        sel = rays.frames == f
        R = so3_exp(twists[f, :3])
        c = pivots[f]
        origins[sel] = (rays.origins[sel] - c) @ R.T + c + twists[f, 3:]
        u = rays.directions[sel] @ R.T
        norms[sel] = np.linalg.norm(u, axis=-1)
        directions[sel] = u / norms[sel, None]
        normals[sel] = rays.normals[sel] @ R.T
    out = ReflectedRays(origins, directions, normals, rays.pixels, rays.disks, rays.frames)
    return out, PoseTape(np.asarray(twists), np.asarray(pivots), rays, norms, directions)


def apply_poses_backward(
    tape: PoseTape, grad_origins: np.ndarray, grad_directions: np.ndarray
) -> np.ndarray:
    """
    位姿变换的反向传播
    Backward pass of the batched pose transform

    Returns:
    - np.ndarray: (F, 6) 对各帧修正量的梯度（旋转向量、毫米平移）。(F, 6) gradient per twist (rotation vector, translation in mm).
    """
    grad = np.zeros_like(tape.twists, dtype=np.float64)
    rays = tape.rays
    for f in np.unique(rays.frames):
        sel = rays.frames == f
        g_o = grad_origins[sel]
        d_hat = tape.directions[sel]
        g_d = grad_directions[sel]
        g_u = (g_d - d_hat * np.sum(d_hat * g_d, axis=-1, keepdims=True)) / tape.direction_norm[
            sel, None
        ]
        # dL/dR as a 3x3 matrix
        G = g_o.T @ (rays.origins[sel] - tape.pivots[f]) + g_u.T @ rays.directions[sel]
        dR = so3_exp_derivatives(tape.twists[f, :3])
        grad[f, :3] = np.einsum("ij,kij->k", G, dR)
        grad[f, 3:] = g_o.sum(axis=0)
    return grad
