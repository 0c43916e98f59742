import math
from typing import Optional, Tuple

import numpy as np

from ..utils.errors import (
    GeometryError,
    GrazingError,
    OutOfSectionError,
    OutsideCorneaError,
    SurfacePreconditionError,
)
from .model import CameraIntrinsics, CorneaModel, CorneaObservation, Ray, RigidPose

__all__ = [
    "surface_z",
    "surface_normal",
    "surface_normals",
    "intersect",
    "intersect_many",
    "reflect",
    "reflect_many",
    "depth_from_radius",
    "eye_projection",
    "eye_projection_many",
]

_SECTION_TOL = 1e-9
_DISK_TOL = 1e-12


def surface_z(model: CorneaModel, r: float) -> float:
    """
    求截面上半径 r 处的表面高度 z
    Surface height z of the cornea section at radius r

    Args:
    - model (CorneaModel): 角膜模型。Cornea model.
    - r (float): 到光轴的距离（毫米），0 <= r <= r_L。Distance from the optical axis (mm), 0 <= r <= r_L.

    Returns:
    - float: 方程 (1-e)z^2 - 2Rz + r^2 = 0 较小的正根。The smaller positive root of (1-e)z^2 - 2Rz + r^2 = 0.
    """
    if r < 0:
        raise ValueError(f"radius must be non-negative, got {r}")
    if r > model.base_radius:
        raise OutOfSectionError(f"r={r} mm exceeds base radius {model.base_radius} mm")
    k = 1.0 - model.eccentricity
    disc = model.apex_radius**2 - k * r * r
    if disc < 0:
        raise GeometryError(f"negative discriminant {disc} at r={r}")
    # r^2 / (R + sqrt(.)) avoids the cancellation of (R - sqrt(.)) / (1 - e)
    return r * r / (model.apex_radius + math.sqrt(disc))


def surface_normals(model: CorneaModel, points: np.ndarray) -> np.ndarray:
    """
    批量计算规范坐标系下的外法线（不检查点是否在面上）
    Outward unit normals in the canonical frame, batched and unchecked
    """
    p = np.asarray(points, dtype=np.float64)
    g = np.stack(
        [
            2.0 * p[..., 0],
            2.0 * p[..., 1],
            2.0 * (1.0 - model.eccentricity) * p[..., 2] - 2.0 * model.apex_radius,
        ],
        axis=-1,
    )
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def surface_normal(model: CorneaModel, point) -> np.ndarray:
    """
    椭球面上一点的单位外法线（隐式方程的归一化梯度）
    Unit outward normal at a surface point (normalized gradient of the implicit equation)

    Args:
    - model (CorneaModel): 角膜模型。Cornea model.
    - point: 规范坐标系下的点（毫米）。Point in the canonical frame (mm).

    Returns:
    - np.ndarray: 单位法线，顶点处为 (0, 0, -1)。Unit normal, (0, 0, -1) at the apex.
    """
    p = np.asarray(point, dtype=np.float64)
    res = float(model.residual(p))
    if abs(res) > 1e-6:
        raise SurfacePreconditionError(f"point {p.tolist()} is off the surface (residual {res})")
    return surface_normals(model, p)


def intersect_many(
    model: CorneaModel,
    origins: np.ndarray,
    directions: np.ndarray,
    pose: Optional[RigidPose] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    批量求光线与角膜截面的最近交点
    Nearest intersections of a batch of rays with the cornea section

    Args:
    - model (CorneaModel): 角膜模型。Cornea model.
    - origins (np.ndarray): (N, 3) 世界坐标系光线起点。(N, 3) ray origins in world frame.
    - directions (np.ndarray): (N, 3) 单位方向。(N, 3) unit directions.
    - pose (RigidPose, optional): 规范坐标系到世界坐标系的变换。Canonical-to-world transform.

    Returns:
    - hit (np.ndarray): (N,) 是否命中。(N,) hit flags.
    - t (np.ndarray): (N,) 光线参数，未命中为 inf。(N,) ray parameters, inf on a miss.
    - points (np.ndarray): (N, 3) 世界坐标系交点。(N, 3) hit points in world frame.
    - normals (np.ndarray): (N, 3) 世界坐标系单位法线。(N, 3) unit normals in world frame.
    """
    if pose is None:
        pose = RigidPose()
    o = pose.apply_inverse(np.atleast_2d(origins))
    d = pose.rotate_inverse(np.atleast_2d(directions))
    k = 1.0 - model.eccentricity
    R = model.apex_radius

    a = k * d[:, 2] ** 2 + d[:, 0] ** 2 + d[:, 1] ** 2
    b = 2.0 * (k * o[:, 2] * d[:, 2] - R * d[:, 2] + o[:, 0] * d[:, 0] + o[:, 1] * d[:, 1])
    c = k * o[:, 2] ** 2 - 2.0 * R * o[:, 2] + o[:, 0] ** 2 + o[:, 1] ** 2
    disc = b * b - 4.0 * a * c
    real = disc >= 0.0
    sq = np.sqrt(np.where(real, disc, 0.0))
    # numerically stable pair of roots
    q = -0.5 * (b + np.where(b >= 0.0, sq, -sq))
    with np.errstate(divide="ignore", invalid="ignore"):
        s1 = q / a
        s2 = np.where(q != 0.0, c / q, s1)
    near = np.minimum(s1, s2)
    far = np.maximum(s1, s2)

    t_b = model.apex_to_base
    r_l = model.base_radius

    def _valid(s):
        p = o + s[:, None] * d
        r = np.hypot(p[:, 0], p[:, 1])
        return (
            real
            & (s >= 0.0)
            & (p[:, 2] >= -_SECTION_TOL)
            & (p[:, 2] <= t_b + _SECTION_TOL)
            & (r <= r_l + _SECTION_TOL)
        )

    ok_near = _valid(near)
    ok_far = _valid(far) & ~ok_near
    t = np.where(ok_near, near, np.where(ok_far, far, np.inf))
    hit = ok_near | ok_far

    pc = o + np.where(hit, t, 0.0)[:, None] * d
    nc = surface_normals(model, pc)
    points = pose.apply(pc)
    normals = pose.rotate(nc)
    points[~hit] = np.nan
    normals[~hit] = np.nan
    return hit, t, points, normals


def intersect(
    model: CorneaModel, ray: Ray, pose: Optional[RigidPose] = None
) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """
    单条光线与角膜截面求交
    Intersect a single ray with the cornea section

    Returns:
    - Optional[Tuple[np.ndarray, np.ndarray]]: (交点, 法线)，未命中返回None。(hit point, normal), None on a miss.
    """
    hit, _, points, normals = intersect_many(
        model, ray.origin[None, :], ray.direction[None, :], pose
    )
    if not hit[0]:
        return None
    return points[0], normals[0]


def reflect_many(d: np.ndarray, n: np.ndarray) -> np.ndarray:
    """
    批量镜面反射 d - 2(n.d)n（不做朝向检查）
    Batched specular reflection d - 2(n.d)n, no facing check
    """
    dn = np.sum(d * n, axis=-1, keepdims=True)
    return d - 2.0 * dn * n


def reflect(d, n) -> np.ndarray:
    """
    标准反射方程
    Standard reflection equation

    Args:
    - d: 单位入射方向。Unit incoming direction.
    - n: 单位法线，需满足 d.n < 0。Unit normal, d.n < 0 required.

    Returns:
    - np.ndarray: 单位反射方向。Unit reflected direction.
    """
    d = np.asarray(d, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    if abs(np.linalg.norm(d) - 1.0) > 1e-9 or abs(np.linalg.norm(n) - 1.0) > 1e-9:
        raise ValueError("reflect expects unit vectors")
    if float(np.dot(d, n)) >= 0.0:
        raise GrazingError(f"direction {d.tolist()} does not face normal {n.tolist()}")
    return reflect_many(d, n)


def depth_from_radius(model: CorneaModel, intr: CameraIntrinsics, r_img: float) -> float:
    """
    弱透视假设下角膜的平均深度 r_L * f / r_img
    Average cornea depth under weak perspective, r_L * f / r_img

    Args:
    - model (CorneaModel): 角膜模型。Cornea model.
    - intr (CameraIntrinsics): 相机内参。Camera intrinsics.
    - r_img (float): 投影椭圆长半轴（像素）。Major radius of the projected ellipse (pixels).

    Returns:
    - float: 深度（毫米）。Depth (mm).
    """
    if not r_img > 0:
        raise ValueError(f"r_img must be positive, got {r_img}")
    return model.base_radius * intr.focal_length / r_img


def eye_projection_many(obs: CorneaObservation, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """
    批量眼盘投影，返回 (N, 2) 的 (py, px)，不检查范围
    Batched eye-disk projection returning (N, 2) (py, px), unchecked
    """
    ys = np.asarray(ys, dtype=np.float64)
    xs = np.asarray(xs, dtype=np.float64)
    return np.stack([(ys - obs.cy) / obs.r_img, (xs - obs.cx) / obs.r_img], axis=-1)


def eye_projection(obs: CorneaObservation, pixel) -> Tuple[float, float]:
    """
    将像素 (y, x) 投影到眼盘坐标
    Project pixel (y, x) onto the eye disk

    Args:
    - obs (CorneaObservation): 角膜观测。Cornea observation.
    - pixel: (y, x) 像素坐标。(y, x) pixel coordinate.

    Returns:
    - Tuple[float, float]: ((y-c_y)/r_img, (x-c_x)/r_img)
    """
    y, x = pixel
    p = eye_projection_many(obs, np.array([y]), np.array([x]))[0]
    if np.hypot(p[0], p[1]) > 1.0 + _DISK_TOL:
        raise OutsideCorneaError(f"pixel {pixel} lies outside the observed cornea")
    return float(p[0]), float(p[1])
