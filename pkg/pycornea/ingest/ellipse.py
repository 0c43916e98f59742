from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_fill_holes

from ..utils.errors import EllipseFitError

__all__ = ["EllipseFit", "fit_ellipse", "boundary_points"]


@dataclass(frozen=True)
class EllipseFit:
    """
    椭圆拟合结果（像素坐标，x 为列，y 为行）
    Ellipse fit result in pixel coordinates (x is the column, y the row)
    """

    cx: float
    cy: float
    major: float
    minor: float
    angle: float
    """
    长轴方向（弧度，自 +x 转向 +y，取值 [0, pi)）
    Major-axis direction in radians, from +x toward +y, in [0, pi)
    """
    residual: float
    """
    Sampson距离的均方根（像素）
    RMS Sampson distance (pixels)
    """

    def __post_init__(self):
        if not (self.major >= self.minor > 0):
            raise ValueError(f"invalid ellipse radii major={self.major}, minor={self.minor}")
        if self.residual < 0:
            raise ValueError("residual must be non-negative")

    def contains(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """
        点是否位于椭圆内（含边界）
        Whether points lie inside the ellipse, boundary included
        """
        c, s = np.cos(self.angle), np.sin(self.angle)
        dx = np.asarray(xs, np.float64) - self.cx
        dy = np.asarray(ys, np.float64) - self.cy
        u = c * dx + s * dy
        v = -s * dx + c * dy
        return (u / self.major) ** 2 + (v / self.minor) ** 2 <= 1.0 + 1e-12

    def to_dict(self) -> dict:
        return {
            "cx": self.cx,
            "cy": self.cy,
            "major": self.major,
            "minor": self.minor,
            "angle": self.angle,
            "residual": self.residual,
        }

    @staticmethod
    def from_dict(d: dict) -> "EllipseFit":
        return EllipseFit(
            float(d["cx"]),
            float(d["cy"]),
            float(d["major"]),
            float(d["minor"]),
            float(d["angle"]),
            float(d.get("residual", 0.0)),
        )


def fit_ellipse(points: np.ndarray) -> EllipseFit:
    """
    带椭圆约束的直接最小二乘二次曲线拟合（Halir-Flusser数值稳定形式），点先做归一化
    Direct least-squares conic fit constrained to an ellipse (numerically stable Halir-Flusser form)
    on normalized points

    Args:
    - points (np.ndarray): (N, 2) 边界点 (x, y)，N >= 6。(N, 2) boundary points (x, y), N >= 6.

    Returns:
    - EllipseFit: 拟合结果。Fit result.
    """
    pts = np.asarray(points, np.float64).reshape(-1, 2)
    if len(pts) < 6:
        raise EllipseFitError(f"ellipse fitting needs at least 6 points, got {len(pts)}")
    mean = pts.mean(axis=0)
    scale = np.sqrt(np.mean(np.sum((pts - mean) ** 2, axis=1)) / 2.0)
    if not scale > 0:
        raise EllipseFitError("all boundary points coincide")
    x = (pts[:, 0] - mean[0]) / scale
    y = (pts[:, 1] - mean[1]) / scale

    d1 = np.column_stack([x * x, x * y, y * y])
    d2 = np.column_stack([x, y, np.ones_like(x)])
    s1 = d1.T @ d1
    s2 = d1.T @ d2
    s3 = d2.T @ d2
    try:
        t = -np.linalg.solve(s3, s2.T)
    except np.linalg.LinAlgError as e:
        raise EllipseFitError("degenerate boundary point configuration") from e
    m = s1 + s2 @ t
    # premultiply by the inverse of the ellipse constraint matrix
    m = np.vstack([m[2] / 2.0, -m[1], m[0] / 2.0])
    w, v = np.linalg.eig(m)
    v = np.real(v)
    cond = 4.0 * v[0] * v[2] - v[1] ** 2
    candidates = np.flatnonzero((cond > 0) & np.isfinite(np.real(w)))
    if len(candidates) == 0:
        raise EllipseFitError("boundary points do not determine an ellipse")
    a1 = v[:, candidates[np.argmax(cond[candidates])]]
    if a1[0] + a1[2] < 0:
        a1 = -a1
    a2 = t @ a1
    A, B, C = a1
    D, E, F = a2

    try:
        x0, y0 = np.linalg.solve(np.array([[2 * A, B], [B, 2 * C]]), [-D, -E])
    except np.linalg.LinAlgError as e:
        raise EllipseFitError("fitted conic has no center") from e
    f0 = A * x0 * x0 + B * x0 * y0 + C * y0 * y0 + D * x0 + E * y0 + F
    lam, vec = np.linalg.eigh(np.array([[A, B / 2.0], [B / 2.0, C]]))
    axes2 = -f0 / lam
    if not np.all(axes2 > 0) or not np.all(np.isfinite(axes2)):
        raise EllipseFitError("fitted conic is not a real ellipse")
    # eigh sorts ascending, so the first eigenvalue belongs to the major axis
    major = float(np.sqrt(axes2[0]) * scale)
    minor = float(np.sqrt(axes2[1]) * scale)
    angle = float(np.mod(np.arctan2(vec[1, 0], vec[0, 0]), np.pi))

    q = A * x * x + B * x * y + C * y * y + D * x + E * y + F
    gx = 2 * A * x + B * y + D
    gy = B * x + 2 * C * y + E
    sampson = q / np.maximum(np.hypot(gx, gy), 1e-300)
    residual = float(np.sqrt(np.mean(sampson**2)) * scale)

    return EllipseFit(
        cx=float(x0 * scale + mean[0]),
        cy=float(y0 * scale + mean[1]),
        major=major,
        minor=min(minor, major),
        angle=angle,
        residual=residual,
    )


def boundary_points(mask: np.ndarray, fill_holes: bool = True) -> np.ndarray:
    """
    提取掩码的边缘点：4邻域内外像素对的中点，图像外视为掩码外
    Mask edge points: midpoints of 4-connected inside/outside pixel pairs, outside the image counts as outside

    Args:
    - mask (np.ndarray): (H, W) 布尔掩码。(H, W) boolean mask.
    - fill_holes (bool): 先填充内部空洞（如高光），只保留外轮廓。Fill interior holes (e.g. glints) first so only the outer contour remains.

    Returns:
    - np.ndarray: (N, 2) 点 (x, y)，按行优先顺序。(N, 2) points (x, y) in row-major order.
    """
    mask = np.asarray(mask, bool)
    if fill_holes:
        mask = binary_fill_holes(mask)
    padded = np.pad(mask, 1, constant_values=False)
    # horizontal pairs (r, c) - (r, c + 1) in padded coordinates
    hr, hc = np.nonzero(padded[:, :-1] != padded[:, 1:])
    vr, vc = np.nonzero(padded[:-1, :] != padded[1:, :])
    xs = np.concatenate([hc - 0.5, vc - 1.0])
    ys = np.concatenate([hr - 1.0, vr - 0.5])
    order = np.lexsort((xs, ys))
    return np.column_stack([xs[order], ys[order]])
