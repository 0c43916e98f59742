import logging
from typing import Optional

import numpy as np

from .camera import pixel_directions
from .cornea import depth_from_radius, eye_projection_many, intersect_many, reflect_many
from .model import CameraIntrinsics, CorneaModel, CorneaObservation, ReflectedRays, RigidPose
from .so3 import rotation_between

__all__ = ["place_cornea", "pose_from_gaze", "build_reflected_rays", "limbus_center"]

_AXIS = np.array([0.0, 0.0, 1.0])


def pose_from_gaze(model: CorneaModel, center, gaze) -> RigidPose:
    """
    由角膜基底中心与注视方向构造规范坐标系到世界坐标系的变换
    Canonical-to-world pose from the limbus (base) center and the gaze direction

    Args:
    - model (CorneaModel): 角膜模型。Cornea model.
    - center: 基底圆心（世界坐标，毫米）。Center of the base circle (world, mm).
    - gaze: 顶点外法线方向（世界坐标）。Outward apex normal direction (world frame).

    Returns:
    - RigidPose: 顶点位于 translation，规范 +z 指向眼内。Apex at the translation, canonical +z pointing into the eye.
    """
    gaze = np.asarray(gaze, dtype=np.float64)
    gaze = gaze / np.linalg.norm(gaze)
    R = rotation_between(_AXIS, -gaze)
    apex = np.asarray(center, dtype=np.float64) + model.apex_to_base * gaze
    return RigidPose(R, apex)


def limbus_center(model: CorneaModel, pose: RigidPose) -> np.ndarray:
    """
    位姿对应的基底圆心（世界坐标）
    World position of the base-circle center for a pose
    """
    return pose.apply(np.array([0.0, 0.0, model.apex_to_base]))


def place_cornea(
    model: CorneaModel, intr: CameraIntrinsics, obs: CorneaObservation
) -> RigidPose:
    """
    由观测椭圆初始化角膜位姿：深度取弱透视平均深度，朝向正对相机
    Initial cornea pose from the observed ellipse: weak-perspective depth, facing the camera

    Args:
    - model (CorneaModel): 角膜模型。Cornea model.
    - intr (CameraIntrinsics): 固定相机内参，相机位于世界原点。Fixed camera intrinsics, camera at the world origin.
    - obs (CorneaObservation): 角膜观测。Cornea observation.

    Returns:
    - RigidPose: 规范坐标系到世界坐标系的变换。Canonical-to-world transform.
    """
    depth = depth_from_radius(model, intr, obs.r_img)
    center = np.array(
        [
            (obs.cx - intr.cx) / intr.focal_length * depth,
            (obs.cy - intr.cy) / intr.focal_length * depth,
            depth,
        ]
    )
    # apex normal points back at the camera
    gaze = -center / np.linalg.norm(center)
    return pose_from_gaze(model, center, gaze)


def build_reflected_rays(
    model: CorneaModel,
    intr: CameraIntrinsics,
    obs: CorneaObservation,
    pose: Optional[RigidPose] = None,
) -> ReflectedRays:
    """
    为观测中每个未遮挡的角膜像素预计算反射光线（训练前只需计算一次）
    Precompute one reflected ray per unmasked cornea pixel (done once before training)

    Args:
    - model (CorneaModel): 角膜模型。Cornea model.
    - intr (CameraIntrinsics): 相机内参。Camera intrinsics.
    - obs (CorneaObservation): 角膜观测，mask 为全图布尔掩码。Cornea observation with a full-frame boolean mask.
    - pose (RigidPose, optional): 角膜位姿，默认由 place_cornea 得到。Cornea pose, from place_cornea by default.

    Returns:
    - ReflectedRays: 按像素行优先排列的反射光线。Reflected rays in row-major pixel order.
    """
    if pose is None:
        pose = place_cornea(model, intr, obs)
    if obs.mask is None or not obs.mask.any():
        logging.warning("frame %s has an empty cornea mask, no rays built", obs.frame)
        return ReflectedRays.empty()
    ys, xs = np.nonzero(obs.mask)
    disks = eye_projection_many(obs, ys, xs)
    inside = np.hypot(disks[:, 0], disks[:, 1]) <= 1.0 + 1e-12
    ys, xs, disks = ys[inside], xs[inside], disks[inside]

    d = pixel_directions(intr, ys, xs)
    o = np.zeros_like(d)
    hit, _, points, normals = intersect_many(model, o, d, pose)
    d, points, normals = d[hit], points[hit], normals[hit]
    facing = np.sum(d * normals, axis=-1) < 0.0
    d, points, normals = d[facing], points[facing], normals[facing]
    keep = np.flatnonzero(hit)[facing]
    reflected = reflect_many(d, normals)
    reflected /= np.linalg.norm(reflected, axis=-1, keepdims=True)

    logging.debug(
        "frame %s: %d mask pixels, %d reflected rays", obs.frame, len(inside), len(keep)
    )
    return ReflectedRays(
        origins=points,
        directions=reflected,
        normals=normals,
        pixels=np.stack([ys[keep], xs[keep]], axis=-1).astype(np.int64),
        disks=disks[keep],
        frames=np.full(len(keep), obs.frame, np.int64),
    )
