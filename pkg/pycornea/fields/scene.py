from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .grid import GridTape, point_gradient, scatter_add, trilinear

__all__ = ["SceneField", "SceneTape", "eval_scene", "softplus", "sigmoid"]


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so large magnitudes never overflow exp
    x = np.asarray(x, np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class SceneTape:
    grid: GridTape
    raw: np.ndarray
    color: np.ndarray


class SceneField:
    """
    稠密体素网格辐射场：位置 -> (密度, 颜色)，三线性插值
    Dense voxel-grid radiance field: position -> (density, color) with trilinear interpolation

    顶点参数为激活前的值：第0通道经 softplus 得到密度（每毫米），第1-3通道经 sigmoid 得到颜色。
    Vertex parameters are pre-activation values: channel 0 becomes density (per mm) through softplus,
    channels 1-3 become color through sigmoid.
    """

    def __init__(
        self,
        lo: Sequence[float],
        hi: Sequence[float],
        resolution: Sequence[int],
        params: Optional[np.ndarray] = None,
        density_init: float = 0.0,
    ):
        """
        Args:
        - lo (Sequence[float]): 包围盒最小角点（毫米）。Bounding-box minimum corner (mm).
        - hi (Sequence[float]): 包围盒最大角点（毫米）。Bounding-box maximum corner (mm).
        - resolution (Sequence[int]): 各轴顶点数，至少为2。Vertices per axis, at least 2.
        - params (np.ndarray, optional): (nx, ny, nz, 4) 初始参数。(nx, ny, nz, 4) initial parameters.
        - density_init (float): 未给出参数时密度通道的初值。Initial raw density when no parameters are given.
        """
        self.lo = np.asarray(lo, np.float64)
        self.hi = np.asarray(hi, np.float64)
        self.resolution = tuple(int(n) for n in resolution)
        if len(self.resolution) != 3 or min(self.resolution) < 2:
            raise ValueError(f"scene resolution must be 3 values >= 2, got {resolution}")
        if np.any(self.hi <= self.lo):
            raise ValueError(f"degenerate bounding box {self.lo.tolist()} - {self.hi.tolist()}")
        if params is None:
            params = np.zeros(self.resolution + (4,), np.float64)
            params[..., 0] = density_init
        params = np.asarray(params, np.float64)
        if params.shape != self.resolution + (4,):
            raise ValueError(f"params shape {params.shape} does not match {self.resolution + (4,)}")
        self.params = params
        self.grad = np.zeros_like(params)

    def zero_grad(self):
        self.grad[...] = 0.0

    def query(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, SceneTape]:
        """
        批量查询密度与颜色
        Batched density and color query

        Args:
        - points (np.ndarray): (M, 3) 世界坐标（毫米）。(M, 3) world positions (mm).

        Returns:
        - density (np.ndarray): (M,) 非负密度，包围盒外为0。(M,) non-negative density, zero outside the box.
        - color (np.ndarray): (M, 3) 颜色，包围盒外为0。(M, 3) color, zero outside the box.
        - tape (SceneTape): 反向传播记录。Record for the backward pass.
        """
        raw, gtape = trilinear(self.params, self.lo, self.hi, points)
        density = np.where(gtape.inside, softplus(raw[:, 0]), 0.0)
        color = np.where(gtape.inside[:, None], sigmoid(raw[:, 1:]), 0.0)
        return density, color, SceneTape(gtape, raw, color)

    def backward(
        self,
        tape: SceneTape,
        grad_density: np.ndarray,
        grad_color: np.ndarray,
        need_points: bool = False,
    ) -> Optional[np.ndarray]:
        """
        将密度与颜色的梯度累加进 self.grad，可选返回对查询点的梯度
        Accumulate density/color gradients into self.grad, optionally returning point gradients
        """
        g_raw = np.empty_like(tape.raw)
        g_raw[:, 0] = grad_density * sigmoid(tape.raw[:, 0])
        g_raw[:, 1:] = grad_color * tape.color * (1.0 - tape.color)
        g_raw[~tape.grid.inside] = 0.0
        scatter_add(tape.grid, g_raw, self.grad)
        if need_points:
            return point_gradient(tape.grid, self.params, g_raw)
        return None

    def copy(self) -> "SceneField":
        return SceneField(self.lo, self.hi, self.resolution, self.params.copy())


def eval_scene(field: SceneField, point, direction=None) -> Tuple[float, np.ndarray]:
    """
    单点查询场景场。颜色与视角无关，direction 仅为接口保留。
    Evaluate the scene field at one point. Color is view-independent; `direction` is accepted for interface parity.

    Returns:
    - Tuple[float, np.ndarray]: (密度, 颜色)。(density, color).
    """
    density, color, _ = field.query(np.asarray(point, np.float64)[None, :])
    return float(density[0]), color[0]
