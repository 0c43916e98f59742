from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..fields.texture import TextureField, TextureTape

__all__ = [
    "CompositionTape",
    "compose",
    "compose_backward",
    "recon_loss",
    "recon_loss_backward",
    "RadialTape",
    "rotate_disks",
    "radial_loss",
    "radial_terms",
    "radial_backward",
]


@dataclass
class CompositionTape:
    mode: str
    passthrough: np.ndarray
    accumulation: np.ndarray
    texture: np.ndarray


def compose(
    scene_color: np.ndarray,
    accumulation: np.ndarray,
    texture_color: np.ndarray,
    mode: str = "additive",
) -> Tuple[np.ndarray, CompositionTape]:
    """
    合成角膜反射与虹膜纹理
    Composite the cornea reflection over the iris texture

    Args:
    - scene_color (np.ndarray): (N, 3) 反射颜色。(N, 3) reflected color.
    - accumulation (np.ndarray): (N,) 反射不透明度积分。(N,) reflection accumulation.
    - texture_color (np.ndarray): (N, 3) 虹膜颜色。(N, 3) iris color.
    - mode (str): "additive" 为 clamp(纹理 + 反射)；"alpha" 为 clamp(反射 + (1 - acc) 纹理)。
      "additive" is clamp(texture + reflection); "alpha" is clamp(reflection + (1 - acc) texture).

    Returns:
    - np.ndarray: (N, 3) 合成颜色，取值 [0, 1]。(N, 3) composited color in [0, 1].
    - CompositionTape: 反向传播记录。Record for the backward pass.
    """
    scene_color = np.asarray(scene_color, np.float64)
    texture_color = np.asarray(texture_color, np.float64)
    accumulation = np.asarray(accumulation, np.float64)
    if mode == "additive":
        raw = texture_color + scene_color
    elif mode == "alpha":
        raw = scene_color + (1.0 - accumulation[..., None]) * texture_color
    else:
        raise ValueError(f"unknown composition mode {mode!r}")
    passthrough = (raw >= 0.0) & (raw <= 1.0)
    return np.clip(raw, 0.0, 1.0), CompositionTape(mode, passthrough, accumulation, texture_color)


def compose_backward(
    tape: CompositionTape, grad: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    合成的反向传播，clamp 饱和处梯度为0
    Backward pass of the composition, zero gradient where the clamp saturates

    Returns:
    - Tuple[np.ndarray, np.ndarray, np.ndarray]: 对反射颜色、不透明度积分、纹理颜色的梯度。
      Gradients for the reflected color, the accumulation and the texture color.
    """
    g = np.where(tape.passthrough, grad, 0.0)
    if tape.mode == "additive":
        return g, np.zeros(g.shape[:-1], np.float64), g
    g_acc = -np.sum(g * tape.texture, axis=-1)
    return g, g_acc, g * (1.0 - tape.accumulation[..., None])


def recon_loss(predicted: np.ndarray, observed: np.ndarray) -> float:
    """
    重建损失：所有像素与通道上的均方误差
    Reconstruction loss: mean squared error over every pixel and channel
    """
    predicted = np.asarray(predicted, np.float64)
    observed = np.asarray(observed, np.float64)
    if predicted.shape != observed.shape:
        raise ValueError(f"batch shapes differ: {predicted.shape} vs {observed.shape}")
    if predicted.size == 0:
        raise ValueError("reconstruction loss of an empty batch")
    return float(np.mean((predicted - observed) ** 2))


def recon_loss_backward(predicted: np.ndarray, observed: np.ndarray) -> np.ndarray:
    predicted = np.asarray(predicted, np.float64)
    return 2.0 * (predicted - np.asarray(observed, np.float64)) / predicted.size


def rotate_disks(disks: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """
    将眼盘坐标绕中心旋转给定角度
    Rotate eye-disk coordinates about the center by the given angles
    """
    disks = np.asarray(disks, np.float64).reshape(-1, 2)
    c = np.cos(angles)
    s = np.sin(angles)
    out = np.empty_like(disks)
    out[:, 0] = c * disks[:, 0] - s * disks[:, 1]
    out[:, 1] = s * disks[:, 0] + c * disks[:, 1]
    # never exceed the input radius
    norm_in = np.hypot(disks[:, 0], disks[:, 1])
    norm_out = np.hypot(out[:, 0], out[:, 1])
    over = norm_out > norm_in
    out[over] *= (norm_in[over] / norm_out[over])[:, None]
    return out


@dataclass
class RadialTape:
    weight: float
    diff: np.ndarray
    base: TextureTape
    rotated: TextureTape


def radial_terms(
    field: TextureField, disks: np.ndarray, angles: np.ndarray, weight: float
) -> Tuple[float, Optional[RadialTape]]:
    """
    批量径向正则：weight * mean_n sum_c (Phi(p_n) - Phi(R_n p_n))^2
    Batched radial regularizer: weight * mean_n sum_c (Phi(p_n) - Phi(R_n p_n))^2

    Returns:
    - float: 损失值。Loss value.
    - Optional[RadialTape]: 反向传播记录，权重为0时为空。Backward record, None when the weight is zero.
    """
    disks = np.asarray(disks, np.float64).reshape(-1, 2)
    if weight == 0.0 or len(disks) == 0:
        return 0.0, None
    base, tape_p = field.query(disks)
    rotated, tape_q = field.query(rotate_disks(disks, angles))
    diff = base - rotated
    loss = weight * float(np.mean(np.sum(diff * diff, axis=-1)))
    return loss, RadialTape(weight, diff, tape_p, tape_q)


def radial_backward(field: TextureField, tape: Optional[RadialTape]):
    if tape is None:
        return
    g = 2.0 * tape.weight * tape.diff / len(tape.diff)
    field.backward(tape.base, g)
    field.backward(tape.rotated, -g)


def radial_loss(
    field: TextureField,
    p,
    rng: Optional[np.random.Generator] = None,
    weight: float = 0.1,
    angle: Optional[float] = None,
) -> float:
    """
    单点径向正则：随机旋转角均匀分布于 [0, 2pi)
    Radial regularizer at one disk coordinate with a rotation angle uniform in [0, 2pi)

    Args:
    - field (TextureField): 纹理场。Texture field.
    - p: 眼盘坐标 (py, px)。Eye-disk coordinate (py, px).
    - rng (np.random.Generator, optional): 旋转角随机源。Source of the rotation angle.
    - weight (float): 正则权重。Regularizer weight.
    - angle (float, optional): 指定旋转角（弧度）。Explicit rotation angle (radians).
    """
    if angle is None:
        if rng is None:
            rng = np.random.default_rng()
        angle = rng.uniform(0.0, 2.0 * np.pi)
    loss, _ = radial_terms(field, np.asarray(p, np.float64)[None, :], np.array([angle]), weight)
    return loss
