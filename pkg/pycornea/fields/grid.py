from dataclasses import dataclass
from typing import Tuple

import numpy as np

__all__ = [
    "GridTape",
    "trilinear",
    "bilinear",
    "scatter_add",
    "point_gradient",
]

# corner k of a cell has offset bits (k >> 2 & 1, k >> 1 & 1, k & 1) for 3D
_CORNERS_3D = np.array([[(k >> 2) & 1, (k >> 1) & 1, k & 1] for k in range(8)], np.int64)
_CORNERS_2D = np.array([[(k >> 1) & 1, k & 1] for k in range(4)], np.int64)


@dataclass
class GridTape:
    """
    一次插值前向计算的记录，用于反向传播
    Record of one interpolation forward pass, consumed by the backward pass
    """

    inside: np.ndarray
    """
    (M,) 查询点是否位于网格范围内。(M,) whether each query lies inside the grid extent.
    """
    index: np.ndarray
    """
    (K, C) 参与插值的顶点扁平索引（仅网格内的点）。(K, C) flat vertex indices for in-grid queries.
    """
    weight: np.ndarray
    """
    (K, C) 插值权重。(K, C) interpolation weights.
    """
    frac: np.ndarray
    """
    (K, D) 单元内的局部坐标。(K, D) local coordinates inside the cell.
    """
    scale: np.ndarray
    """
    (D,) 网格坐标对世界坐标的导数。(D,) derivative of grid coordinates with respect to world coordinates.
    """
    shape: Tuple[int, ...]


def _interpolate(params: np.ndarray, lo, hi, points: np.ndarray, corners: np.ndarray):
    dim = corners.shape[1]
    shape = params.shape[:dim]
    channels = params.shape[dim]
    res = np.asarray(shape, np.int64)
    lo = np.asarray(lo, np.float64)
    hi = np.asarray(hi, np.float64)
    points = np.asarray(points, np.float64).reshape(-1, dim)

    inside = np.all((points >= lo) & (points <= hi), axis=-1)
    scale = (res - 1) / (hi - lo)
    u = (points[inside] - lo) * scale
    base = np.clip(np.floor(u).astype(np.int64), 0, res - 2)
    frac = u - base

    # per-corner weights, product of 1-f or f along each axis
    w_axis = np.stack([1.0 - frac, frac], axis=1)  # (K, 2, D)
    weight = np.ones((len(u), len(corners)), np.float64)
    index = np.zeros((len(u), len(corners)), np.int64)
    strides = np.cumprod(np.concatenate([res[1:], [1]])[::-1])[::-1]
    for k, bits in enumerate(corners):
        for a in range(dim):
            weight[:, k] *= w_axis[:, bits[a], a]
        index[:, k] = ((base + bits) * strides).sum(axis=-1)

    flat = params.reshape(-1, channels)
    values = np.zeros((len(points), channels), np.float64)
    values[inside] = np.einsum("kc,kcn->kn", weight, flat[index])
    tape = GridTape(inside, index, weight, frac, scale, tuple(int(s) for s in shape))
    return values, tape


def trilinear(params: np.ndarray, lo, hi, points: np.ndarray) -> Tuple[np.ndarray, GridTape]:
    """
    三维网格三线性插值，网格外的点返回0
    Trilinear interpolation on a 3D vertex grid, zero outside the grid extent

    Args:
    - params (np.ndarray): (nx, ny, nz, C) 顶点参数。(nx, ny, nz, C) vertex parameters.
    - lo, hi: 包围盒的最小、最大角点，顶点均匀分布于其上。Bounding-box corners spanned by the vertices.
    - points (np.ndarray): (M, 3) 查询点。(M, 3) query points.

    Returns:
    - values (np.ndarray): (M, C) 插值结果。(M, C) interpolated values.
    - tape (GridTape): 反向传播记录。Record for the backward pass.
    """
    return _interpolate(params, lo, hi, points, _CORNERS_3D)


def bilinear(params: np.ndarray, lo, hi, points: np.ndarray) -> Tuple[np.ndarray, GridTape]:
    """
    二维网格双线性插值
    Bilinear interpolation on a 2D vertex grid
    """
    return _interpolate(params, lo, hi, points, _CORNERS_2D)


def scatter_add(tape: GridTape, grad_values: np.ndarray, grad_params: np.ndarray):
    """
    将对插值结果的梯度累加到顶点参数梯度上
    Accumulate gradients of interpolated values into the vertex-parameter gradient buffer

    Args:
    - tape (GridTape): 前向记录。Forward record.
    - grad_values (np.ndarray): (M, C) 上游梯度。(M, C) upstream gradient.
    - grad_params (np.ndarray): 与参数同形的梯度缓冲，原地累加。Gradient buffer shaped like the parameters, accumulated in place.
    """
    g = np.asarray(grad_values, np.float64)[tape.inside]
    flat = grad_params.reshape(-1, grad_params.shape[-1])
    size = flat.shape[0]
    idx = tape.index.ravel()
    for c in range(flat.shape[1]):
        contrib = (tape.weight * g[:, c : c + 1]).ravel()
        flat[:, c] += np.bincount(idx, weights=contrib, minlength=size)


def point_gradient(tape: GridTape, params: np.ndarray, grad_values: np.ndarray) -> np.ndarray:
    """
    插值结果对查询点坐标的梯度（向量-雅可比积）
    Vector-Jacobian product of the interpolation with respect to the query coordinates

    Returns:
    - np.ndarray: (M, D)，网格外的点为0。(M, D), zero for points outside the grid.
    """
    dim = len(tape.shape)
    corners = _CORNERS_3D if dim == 3 else _CORNERS_2D
    flat = params.reshape(-1, params.shape[-1])
    vals = flat[tape.index]  # (K, corners, C)
    g = np.asarray(grad_values, np.float64)[tape.inside]
    # project the upstream gradient onto each corner value first
    gv = np.einsum("kcn,kn->kc", vals, g)
    f = tape.frac
    if len(f) == 0:
        return np.zeros((len(tape.inside), dim), np.float64)
    out = np.zeros((len(tape.inside), dim), np.float64)
    sub = np.zeros((len(f), dim), np.float64)
    for a in range(dim):
        acc = np.zeros(len(f), np.float64)
        for k, bits in enumerate(corners):
            w = np.full(len(f), 1.0 if bits[a] == 1 else -1.0)
            for b in range(dim):
                if b != a:
                    w = w * (f[:, b] if bits[b] == 1 else 1.0 - f[:, b])
            acc += w * gv[:, k]
        sub[:, a] = acc * tape.scale[a]
    out[tape.inside] = sub
    return out
