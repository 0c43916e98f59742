from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..utils.errors import FieldDomainError
from .grid import GridTape, bilinear, scatter_add
from .scene import sigmoid

__all__ = ["TextureField", "TextureTape", "eval_texture"]

_DISK_TOL = 1e-9


@dataclass
class TextureTape:
    grid: Optional[GridTape]
    color: np.ndarray


class TextureField:
    """
    虹膜纹理场：眼盘坐标 p=(py, px) -> 颜色，定义在单位圆的外接正方形上，双线性插值
    Iris texture field: eye-disk coordinate p=(py, px) -> color over the unit disk's bounding square, bilinear

    enabled=False 时纹理被冻结为纯黑（关闭纹理分解的消融实验）。
    With enabled=False the texture is frozen at black (the no-texture-decomposition ablation).
    """

    def __init__(
        self,
        resolution: int,
        params: Optional[np.ndarray] = None,
        enabled: bool = True,
    ):
        self.resolution = int(resolution)
        if self.resolution < 2:
            raise ValueError(f"texture resolution must be >= 2, got {resolution}")
        if params is None:
            params = np.zeros((self.resolution, self.resolution, 3), np.float64)
        params = np.asarray(params, np.float64)
        if params.shape != (self.resolution, self.resolution, 3):
            raise ValueError(f"params shape {params.shape} does not match resolution {resolution}")
        self.params = params
        self.grad = np.zeros_like(params)
        self.enabled = bool(enabled)

    @staticmethod
    def black(resolution: int) -> "TextureField":
        """
        冻结为纯黑的纹理场
        Texture field frozen at black
        """
        return TextureField(resolution, enabled=False)

    def zero_grad(self):
        self.grad[...] = 0.0

    def query(self, disks: np.ndarray) -> Tuple[np.ndarray, TextureTape]:
        """
        批量查询纹理颜色
        Batched texture query

        Args:
        - disks (np.ndarray): (M, 2) 眼盘坐标，需满足 |p| <= 1。(M, 2) disk coordinates with |p| <= 1.

        Returns:
        - color (np.ndarray): (M, 3)
        - tape (TextureTape): 反向传播记录。Record for the backward pass.
        """
        disks = np.asarray(disks, np.float64).reshape(-1, 2)
        radius = np.hypot(disks[:, 0], disks[:, 1])
        if np.any(radius > 1.0 + _DISK_TOL):
            raise FieldDomainError(
                f"texture queried outside the unit disk (max |p| = {radius.max():.6f})"
            )
        if not self.enabled:
            color = np.zeros((len(disks), 3), np.float64)
            return color, TextureTape(None, color)
        raw, gtape = bilinear(self.params, (-1.0, -1.0), (1.0, 1.0), disks)
        color = sigmoid(raw)
        return color, TextureTape(gtape, color)

    def backward(self, tape: TextureTape, grad_color: np.ndarray):
        if tape.grid is None:
            return
        g_raw = grad_color * tape.color * (1.0 - tape.color)
        scatter_add(tape.grid, g_raw, self.grad)

    def colors(self) -> np.ndarray:
        """
        顶点处的激活颜色
        Activated colors at the grid vertices
        """
        if not self.enabled:
            return np.zeros_like(self.params)
        return sigmoid(self.params)

    def copy(self) -> "TextureField":
        return TextureField(self.resolution, self.params.copy(), self.enabled)


def eval_texture(field: TextureField, p) -> np.ndarray:
    """
    单点查询纹理场
    Evaluate the texture field at one disk coordinate
    """
    color, _ = field.query(np.asarray(p, np.float64)[None, :])
    return color[0]
