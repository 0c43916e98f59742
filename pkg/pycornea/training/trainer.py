import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import cv2
import numpy as np

from ..fields.render import backward as render_backward
from ..fields.render import render_rays
from ..geometry.model import CameraIntrinsics, CorneaModel, ReflectedRays, RigidPose
from ..geometry.placement import limbus_center
from ..utils.errors import TrainingError
from ..utils.metrics import psnr
from .config import TrainConfig
from .data import TrainingData
from .losses import (
    compose,
    compose_backward,
    radial_backward,
    radial_terms,
    recon_loss,
    recon_loss_backward,
)
from .optim import adam_update
from .pose import apply_poses, apply_poses_backward
from .state import TrainState

__all__ = [
    "Batch",
    "Draws",
    "ObjectiveResult",
    "LossReport",
    "draw",
    "objective",
    "train_step",
    "fit",
    "predict",
    "training_psnr",
    "pose_errors",
]

_LOG_FIELDS = ["step", "loss", "recon", "radial", "pose_active"]


@dataclass
class Batch:
    rays: ReflectedRays
    colors: np.ndarray


@dataclass
class Draws:
    """
    一步中使用的全部随机量
    Every random quantity consumed by one step
    """

    jitter: np.ndarray
    """
    (N, S) 采样段内偏移
    (N, S) in-segment sample offsets
    """
    angles: np.ndarray
    """
    (N,) 径向正则的旋转角
    (N,) rotation angles of the radial regularizer
    """


@dataclass
class ObjectiveResult:
    loss: float
    recon: float
    radial: float
    predicted: np.ndarray
    grad_twists: np.ndarray
    """
    (F, 6) 对位姿修正的梯度（毫米平移单位）
    (F, 6) gradient of the pose corrections (translation in mm)
    """


@dataclass
class LossReport:
    step: int
    loss: float
    recon: float
    radial: float
    pose_active: bool

    def to_row(self) -> Dict[str, object]:
        return {
            "step": self.step,
            "loss": repr(self.loss),
            "recon": repr(self.recon),
            "radial": repr(self.radial),
            "pose_active": int(self.pose_active),
        }


def draw(state: TrainState, n_rays: int) -> Draws:
    """
    从训练状态的随机源抽取一步所需的随机量
    Draw one step's random quantities from the state's generator
    """
    cfg = state.config
    if cfg.stratified:
        jitter = state.rng.random((n_rays, cfg.n_samples))
    else:
        jitter = np.full((n_rays, cfg.n_samples), 0.5)
    angles = state.rng.uniform(0.0, 2.0 * np.pi, n_rays)
    return Draws(jitter, angles)


def objective(
    state: TrainState, batch: Batch, draws: Draws, with_pose_grad: bool = True
) -> ObjectiveResult:
    """
    在固定随机量下计算总损失与全部梯度；场的梯度写入各自的 grad 缓冲（先清零）
    Evaluate the total loss and every gradient for fixed random draws; field gradients are written
    into their `grad` buffers, which are cleared first

    Args:
    - state (TrainState): 训练状态。Training state.
    - batch (Batch): 光线与观测颜色。Rays and observed colors.
    - draws (Draws): 随机量。Random draws.
    - with_pose_grad (bool): 是否计算位姿梯度。Whether to compute pose gradients.

    Returns:
    - ObjectiveResult: 损失各项与位姿梯度。Loss terms and the pose gradient.
    """
    cfg = state.config
    state.scene.zero_grad()
    state.texture.zero_grad()

    posed, pose_tape = apply_poses(state.twists, state.pivots, batch.rays)
    render = render_rays(
        state.scene, posed.origins, posed.directions, cfg.sampling, jitter=draws.jitter
    )
    tex, tex_tape = state.texture.query(batch.rays.disks)
    predicted, comp_tape = compose(render.color, render.accumulation, tex, cfg.composition)

    recon = recon_loss(predicted, batch.colors)
    radial, radial_tape = radial_terms(
        state.texture, batch.rays.disks, draws.angles, cfg.lambda_radial
    )

    g_scene, g_acc, g_tex = compose_backward(comp_tape, recon_loss_backward(predicted, batch.colors))
    state.texture.backward(tex_tape, g_tex)
    radial_backward(state.texture, radial_tape)
    ray_grads = render_backward(render, g_scene, g_acc, need_ray_grads=with_pose_grad)
    if with_pose_grad:
        grad_twists = apply_poses_backward(pose_tape, *ray_grads)
    else:
        grad_twists = np.zeros_like(state.twists)
    return ObjectiveResult(recon + radial, recon, radial, predicted, grad_twists)


def _pose_active(state: TrainState) -> bool:
    cfg = state.config
    return cfg.optimize_pose and cfg.lr_pose > 0 and state.step >= cfg.warmup_steps


def train_step(state: TrainState, batch: Batch) -> Tuple[TrainState, LossReport]:
    """
    一步联合优化：位姿变换 -> 体渲染 -> 纹理查询 -> 合成 -> 损失 -> Adam更新
    One joint-optimization step: pose -> volume render -> texture -> composite -> loss -> Adam update

    学习率为0、处于预热期或被关闭的参数组完全跳过，其矩估计不变。
    Parameter groups with zero learning rate, in warm-up or disabled are skipped entirely, moments included.

    Args:
    - state (TrainState): 训练状态，原地更新。Training state, updated in place.
    - batch (Batch): 非空的光线批。Non-empty ray batch.

    Returns:
    - TrainState: 更新后的状态。The updated state.
    - LossReport: 各损失项。Loss terms.
    """
    if len(batch.rays) == 0:
        raise ValueError("train_step needs a non-empty batch")
    cfg = state.config
    pose_active = _pose_active(state)
    draws = draw(state, len(batch.rays))
    result = objective(state, batch, draws, with_pose_grad=pose_active)

    if not np.isfinite(result.loss):
        raise TrainingError(
            f"non-finite loss at step {state.step}",
            {
                "step": state.step,
                "loss": result.loss,
                "recon": result.recon,
                "radial": result.radial,
                "scene_params_finite": bool(np.all(np.isfinite(state.scene.params))),
                "texture_params_finite": bool(np.all(np.isfinite(state.texture.params))),
                "twists": state.twists.tolist(),
                "batch_size": len(batch.rays),
            },
        )

    if cfg.lr_scene > 0:
        adam_update(
            state.scene.params, state.scene.grad, state.moments["scene"],
            cfg.lr_scene, cfg.beta1, cfg.beta2, cfg.eps,
        )
    if cfg.lr_texture > 0 and state.texture.enabled:
        adam_update(
            state.texture.params, state.texture.grad, state.moments["texture"],
            cfg.lr_texture, cfg.beta1, cfg.beta2, cfg.eps,
        )
    if pose_active:
        # the optimizer sees translations in units of translation_scale_mm
        scale = np.array([1.0, 1.0, 1.0] + [cfg.translation_scale_mm] * 3)
        variables = state.twists / scale
        adam_update(
            variables, result.grad_twists * scale, state.moments["pose"],
            cfg.lr_pose, cfg.beta1, cfg.beta2, cfg.eps,
        )
        state.twists = variables * scale

    report = LossReport(state.step, result.loss, result.recon, result.radial, pose_active)
    state.step += 1
    return state, report


def fit(
    data: TrainingData,
    config: TrainConfig,
    state: Optional[TrainState] = None,
    loss_log: Optional[Union[str, Path]] = None,
    callback: Optional[Callable[[TrainState, LossReport], None]] = None,
) -> TrainState:
    """
    按配置的步数与批大小运行联合优化
    Run the joint optimization for the configured number of steps and batch size

    Args:
    - data (TrainingData): 训练数据，至少两帧。Training data with at least two frames.
    - config (TrainConfig): 训练配置。Training config.
    - state (TrainState, optional): 续训的状态，默认重新初始化。State to resume, initialized afresh by default.
    - loss_log (Union[str, Path], optional): 逐步损失CSV文件。Per-step loss CSV file.
    - callback (Callable, optional): 每步结束后调用。Called after every step.

    Returns:
    - TrainState: 训练后的状态。Trained state.
    """
    if data.n_frames < 2:
        raise ValueError(
            f"dataset has {data.n_frames} frame(s); reconstruction from corneal reflections "
            "needs at least two views of the moving eye"
        )
    if len(data.rays) == 0:
        raise ValueError("dataset produced no reflected rays, check the cornea masks")
    if state is None:
        state = TrainState.initialize(config, data)
    n = len(data.rays)
    batch_size = min(config.batch_size, n)
    logging.info(
        "training on %d rays from %d frames for %d steps", n, data.n_frames, config.steps
    )

    log_file = None
    writer = None
    if loss_log is not None:
        loss_log = Path(loss_log)
        loss_log.parent.mkdir(parents=True, exist_ok=True)
        log_file = open(loss_log, "w", newline="", encoding="utf-8")
        writer = csv.DictWriter(log_file, fieldnames=_LOG_FIELDS)
        writer.writeheader()
    try:
        while state.step < config.steps:
            idx = state.rng.integers(0, n, batch_size)
            batch = Batch(data.rays.subset(idx), data.colors[idx])
            state, report = train_step(state, batch)
            if writer is not None:
                writer.writerow(report.to_row())
            if config.log_every > 0 and report.step % config.log_every == 0:
                logging.info(
                    "step %d loss %.6f recon %.6f radial %.6f",
                    report.step, report.loss, report.recon, report.radial,
                )
            if callback is not None:
                callback(state, report)
    finally:
        if log_file is not None:
            log_file.close()
    return state


def predict(state: TrainState, rays: ReflectedRays, chunk: int = 4096) -> np.ndarray:
    """
    以段中点采样预测光线的合成颜色
    Predict composited colors for rays with midpoint sampling

    Returns:
    - np.ndarray: (N, 3)
    """
    cfg = state.config
    out = np.empty((len(rays), 3), np.float64)
    for i in range(0, len(rays), chunk):
        sub = rays.subset(slice(i, i + chunk))
        posed, _ = apply_poses(state.twists, state.pivots, sub)
        render = render_rays(
            state.scene, posed.origins, posed.directions, cfg.sampling, record=False
        )
        tex, _ = state.texture.query(sub.disks)
        out[i : i + chunk], _ = compose(
            render.color, render.accumulation, tex, cfg.composition
        )
    return out


def training_psnr(state: TrainState, data: TrainingData) -> float:
    """
    训练像素（掩码内）上的重建PSNR
    Reconstruction PSNR over the masked training pixels
    """
    return psnr(predict(state, data.rays), data.colors)


def _reproject(intr: CameraIntrinsics, point: np.ndarray) -> np.ndarray:
    pixel, _ = cv2.projectPoints(
        point.reshape(1, 1, 3), np.zeros(3), np.zeros(3), intr.matrix, None
    )
    return pixel.reshape(2)


def pose_errors(
    state: TrainState,
    base_poses: List[RigidPose],
    ground_truth: List[RigidPose],
    model: CorneaModel,
    intr: CameraIntrinsics,
) -> Dict[str, float]:
    """
    初始与优化后角膜中心相对真值的误差
    Cornea-center error of the initial and the refined poses against ground truth

    Args:
    - state (TrainState): 训练状态。Training state.
    - base_poses (List[RigidPose]): 训练时光线所用的基准位姿，来源须与 state.pose_source 一致。Base poses the rays were built with, matching state.pose_source.
    - ground_truth (List[RigidPose]): 真值位姿。Ground-truth poses.
    - model (CorneaModel): 角膜模型。Cornea model.
    - intr (CameraIntrinsics): 相机内参。Camera intrinsics.

    Returns:
    - Dict[str, float]: 平均重投影误差（像素）与三维误差（毫米）。Mean reprojection error (px) and 3D error (mm).
    """
    n = len(state.frame_ids)
    if len(ground_truth) != n or len(base_poses) != n:
        raise ValueError(
            f"{len(base_poses)} base and {len(ground_truth)} ground-truth poses for {n} frames"
        )
    if not np.allclose([p.translation for p in base_poses], state.pivots, atol=1e-6):
        raise ValueError(
            f"base poses do not match the {state.pose_source!r} poses the state was trained from"
        )
    init_px, refined_px, init_mm, refined_mm = [], [], [], []
    for row, (pose, truth) in enumerate(zip(base_poses, ground_truth)):
        target = limbus_center(model, truth)
        initial = limbus_center(model, pose)
        refined = limbus_center(model, state.pose_delta(row).compose(pose))
        init_mm.append(np.linalg.norm(initial - target))
        refined_mm.append(np.linalg.norm(refined - target))
        t_px = _reproject(intr, target)
        init_px.append(np.linalg.norm(_reproject(intr, initial) - t_px))
        refined_px.append(np.linalg.norm(_reproject(intr, refined) - t_px))
    return {
        "initial_reprojection_px": float(np.mean(init_px)),
        "refined_reprojection_px": float(np.mean(refined_px)),
        "initial_center_mm": float(np.mean(init_mm)),
        "refined_center_mm": float(np.mean(refined_mm)),
    }
