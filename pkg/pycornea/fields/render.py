from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from ..geometry.camera import pixel_grid_rays
from ..geometry.model import CameraIntrinsics, ReflectedRay, ReflectedRays, RigidPose
from ..utils.errors import BackwardStateError
from .scene import SceneField, SceneTape

__all__ = [
    "Sampling",
    "RenderResult",
    "RenderTape",
    "stratified_samples",
    "composite",
    "render_rays",
    "volume_render",
    "backward",
    "render_direct",
]


@dataclass(frozen=True)
class Sampling:
    """
    沿光线的采样设置
    Sampling settings along a ray
    """

    near: float
    """
    起始距离（毫米）
    Near bound (mm)
    """
    far: float
    """
    终止距离（毫米）
    Far bound (mm)
    """
    n_samples: int
    stratified: bool = True
    """
    是否分层抖动采样，否则取各段中点
    Jittered stratified sampling, otherwise segment midpoints
    """

    def __post_init__(self):
        if not np.isfinite(self.near) or not np.isfinite(self.far) or self.near >= self.far:
            raise ValueError(f"degenerate sampling bounds near={self.near}, far={self.far}")
        if self.near < 0:
            raise ValueError(f"near bound must be non-negative, got {self.near}")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")


def stratified_samples(
    sampling: Sampling,
    n_rays: int,
    rng: Optional[np.random.Generator] = None,
    jitter: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    在 [near, far] 的等分段内各取一个采样距离
    One sample distance per equal segment of [near, far]

    Args:
    - sampling (Sampling): 采样设置。Sampling settings.
    - n_rays (int): 光线数。Number of rays.
    - rng (np.random.Generator, optional): 抖动随机源；为空且未给出 jitter 时取中点。Jitter source; midpoints when neither rng nor jitter is given.
    - jitter (np.ndarray, optional): (n_rays, n_samples) 段内偏移，取值 [0, 1)。(n_rays, n_samples) in-segment offsets in [0, 1).

    Returns:
    - np.ndarray: (n_rays, n_samples) 递增的采样距离。(n_rays, n_samples) increasing sample distances.
    """
    shape = (n_rays, sampling.n_samples)
    if jitter is None:
        if rng is not None and sampling.stratified:
            jitter = rng.random(shape)
        else:
            jitter = np.full(shape, 0.5)
    jitter = np.broadcast_to(np.asarray(jitter, np.float64), shape)
    step = (sampling.far - sampling.near) / sampling.n_samples
    return sampling.near + (np.arange(sampling.n_samples) + jitter) * step


def composite(
    density: np.ndarray, color: np.ndarray, t: np.ndarray, far: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    体渲染求积：alpha_i = 1 - exp(-sigma_i delta_i)，T_i = prod_{j<i}(1 - alpha_j)
    Volume-rendering quadrature: alpha_i = 1 - exp(-sigma_i delta_i), T_i = prod_{j<i}(1 - alpha_j)

    Args:
    - density (np.ndarray): (N, S) 采样点密度。(N, S) sample densities.
    - color (np.ndarray): (N, S, 3) 采样点颜色。(N, S, 3) sample colors.
    - t (np.ndarray): (N, S) 采样距离。(N, S) sample distances.
    - far (float): 最后一段的终点。End of the last segment.

    Returns:
    - rgb (np.ndarray): (N, 3)
    - acc (np.ndarray): (N,)
    - weights (np.ndarray): (N, S) T_i * alpha_i
    - trans_next (np.ndarray): (N, S) T_{i+1}
    - delta (np.ndarray): (N, S) 段长。Segment lengths.
    """
    delta = np.diff(t, axis=1, append=np.full((t.shape[0], 1), float(far)))
    tau = density * delta
    cum = np.cumsum(tau, axis=1)
    trans = np.exp(-(cum - tau))
    trans_next = np.exp(-cum)
    weights = trans - trans_next
    rgb = np.einsum("ns,nsc->nc", weights, color)
    acc = weights.sum(axis=1)
    return rgb, acc, weights, trans_next, delta


@dataclass
class RenderTape:
    """
    体渲染前向记录
    Forward record of a volume render
    """

    field: SceneField
    scene: SceneTape
    t: np.ndarray
    delta: np.ndarray
    density: np.ndarray
    color: np.ndarray
    weights: np.ndarray
    trans_next: np.ndarray


@dataclass
class RenderResult:
    """
    体渲染结果
    Volume-rendering result
    """

    color: np.ndarray
    """
    (N, 3) 颜色，取值 [0, 1]
    (N, 3) color in [0, 1]
    """
    accumulation: np.ndarray
    """
    (N,) 不透明度积分，取值 [0, 1]
    (N,) integrated opacity in [0, 1]
    """
    tape: Optional[RenderTape] = None


def render_rays(
    field: SceneField,
    origins: np.ndarray,
    directions: np.ndarray,
    sampling: Sampling,
    rng: Optional[np.random.Generator] = None,
    jitter: Optional[np.ndarray] = None,
    record: bool = True,
) -> RenderResult:
    """
    沿任意光线批量体渲染场景场
    Volume-render the scene field along a batch of arbitrary rays

    Args:
    - field (SceneField): 场景场。Scene field.
    - origins (np.ndarray): (N, 3) 光线起点。(N, 3) ray origins.
    - directions (np.ndarray): (N, 3) 单位方向。(N, 3) unit directions.
    - sampling (Sampling): 采样设置。Sampling settings.
    - rng (np.random.Generator, optional): 抖动随机源。Jitter source.
    - jitter (np.ndarray, optional): 显式段内偏移，优先于 rng。Explicit in-segment offsets, used instead of rng.
    - record (bool): 是否保留反向传播所需记录。Whether to keep the record needed by backward.

    Returns:
    - RenderResult: 渲染结果。Render result.
    """
    origins = np.asarray(origins, np.float64).reshape(-1, 3)
    directions = np.asarray(directions, np.float64).reshape(-1, 3)
    n = len(origins)
    t = stratified_samples(sampling, n, rng, jitter)
    points = origins[:, None, :] + t[..., None] * directions[:, None, :]
    density, color, stape = field.query(points.reshape(-1, 3))
    density = density.reshape(t.shape)
    color = color.reshape(t.shape + (3,))
    rgb, acc, weights, trans_next, delta = composite(density, color, t, sampling.far)
    tape = None
    if record:
        tape = RenderTape(field, stape, t, delta, density, color, weights, trans_next)
    return RenderResult(rgb, acc, tape)


def volume_render(
    field: SceneField,
    rays: Union[ReflectedRay, ReflectedRays],
    sampling: Sampling,
    rng: Optional[np.random.Generator] = None,
    jitter: Optional[np.ndarray] = None,
) -> RenderResult:
    """
    沿反射光线体渲染场景场
    Volume-render the scene field along reflected rays

    单条 ReflectedRay 按大小为1的批处理。
    A single ReflectedRay is treated as a batch of one.
    """
    if isinstance(rays, ReflectedRay):
        origins = np.asarray(rays.origin, np.float64)[None, :]
        directions = np.asarray(rays.direction, np.float64)[None, :]
    else:
        origins, directions = rays.origins, rays.directions
    return render_rays(field, origins, directions, sampling, rng, jitter)


def backward(
    result: RenderResult,
    grad_color: np.ndarray,
    grad_acc: Optional[np.ndarray] = None,
    need_ray_grads: bool = False,
) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """
    体渲染反向传播：将梯度累加进场景场参数梯度，可选返回对光线起点与方向的梯度
    Backward pass of a volume render: accumulates into the scene-field gradient and optionally
    returns gradients with respect to ray origins and directions

    Args:
    - result (RenderResult): 带记录的前向结果。Forward result with a record.
    - grad_color (np.ndarray): (N, 3) 对颜色的上游梯度。(N, 3) upstream gradient of the color.
    - grad_acc (np.ndarray, optional): (N,) 对不透明度积分的上游梯度。(N,) upstream gradient of the accumulation.
    - need_ray_grads (bool): 是否返回光线梯度。Whether to return ray gradients.

    Returns:
    - Optional[Tuple[np.ndarray, np.ndarray]]: (g_origin, g_direction)，均为 (N, 3)。(g_origin, g_direction), both (N, 3).
    """
    tape = result.tape
    if tape is None:
        raise BackwardStateError("backward called on a render that recorded no forward state")
    g_rgb = np.asarray(grad_color, np.float64).reshape(-1, 3)
    n, s = tape.t.shape
    if grad_acc is None:
        grad_acc = np.zeros(n, np.float64)
    g_acc = np.asarray(grad_acc, np.float64).reshape(n)

    wc = tape.weights[..., None] * tape.color
    # S_i = sum over k > i of w_k c_k
    tail = np.cumsum(wc[:, ::-1], axis=1)[:, ::-1] - wc
    g_tau = np.einsum("nc,nsc->ns", g_rgb, tape.trans_next[..., None] * tape.color - tail)
    g_tau += g_acc[:, None] * tape.trans_next[:, -1:]
    g_density = g_tau * tape.delta
    g_color = tape.weights[..., None] * g_rgb[:, None, :]

    g_points = tape.field.backward(
        tape.scene, g_density.reshape(-1), g_color.reshape(-1, 3), need_points=need_ray_grads
    )
    if not need_ray_grads:
        return None
    g_points = g_points.reshape(n, s, 3)
    g_origin = g_points.sum(axis=1)
    g_direction = np.einsum("ns,nsc->nc", tape.t, g_points)
    return g_origin, g_direction


def render_direct(
    field: SceneField,
    intr: CameraIntrinsics,
    pose: RigidPose,
    sampling: Sampling,
    chunk: int = 8192,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    从任意相机直接渲染场景场（不经角膜反射），用于新视角与累积不透明度可视化
    Render the scene field directly from an arbitrary camera (no cornea reflection), for novel views
    and accumulation previews

    Args:
    - field (SceneField): 场景场。Scene field.
    - intr (CameraIntrinsics): 相机内参。Camera intrinsics.
    - pose (RigidPose): 相机到世界的变换。Camera-to-world transform.
    - sampling (Sampling): 采样设置，按中点采样。Sampling settings, evaluated at segment midpoints.
    - chunk (int): 每批光线数。Rays per batch.

    Returns:
    - image (np.ndarray): (H, W, 3)
    - accumulation (np.ndarray): (H, W)
    """
    origins, directions = pixel_grid_rays(intr, pose)
    colors = np.empty((len(origins), 3), np.float64)
    acc = np.empty(len(origins), np.float64)
    for i in range(0, len(origins), chunk):
        res = render_rays(
            field, origins[i : i + chunk], directions[i : i + chunk], sampling, record=False
        )
        colors[i : i + chunk] = res.color
        acc[i : i + chunk] = res.accumulation
    return colors.reshape(intr.height, intr.width, 3), acc.reshape(intr.height, intr.width)
