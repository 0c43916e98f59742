from typing import Optional, Tuple

import numpy as np

from ..geometry.model import CorneaObservation
from .ellipse import EllipseFit, boundary_points, fit_ellipse

__all__ = ["ellipse_mask", "to_observation", "observe_mask"]


def ellipse_mask(fit: EllipseFit, shape: Tuple[int, int]) -> np.ndarray:
    """
    椭圆内部的像素掩码（以像素中心判断）
    Mask of pixels whose centers lie inside the ellipse

    Args:
    - fit (EllipseFit): 椭圆。Ellipse.
    - shape (Tuple[int, int]): 图像大小 (H, W)。Image size (H, W).
    """
    ys, xs = np.mgrid[0 : shape[0], 0 : shape[1]]
    return fit.contains(xs, ys)


def to_observation(
    fit: EllipseFit,
    frame: int,
    mask: Optional[np.ndarray] = None,
    shape: Optional[Tuple[int, int]] = None,
) -> CorneaObservation:
    """
    由椭圆拟合结果构造角膜观测：r_img 取长半轴，掩码为椭圆内部与给定虹膜掩码的交集
    Build a cornea observation from an ellipse fit: r_img is the major radius and the mask is the
    ellipse interior intersected with the provided iris mask

    Args:
    - fit (EllipseFit): 椭圆拟合结果。Ellipse fit.
    - frame (int): 帧号。Frame index.
    - mask (np.ndarray, optional): (H, W) 可见虹膜掩码。(H, W) visible-iris mask.
    - shape (Tuple[int, int], optional): 无掩码时的图像大小。Image size when no mask is given.

    Returns:
    - CorneaObservation: 角膜观测。Cornea observation.
    """
    if mask is not None:
        mask = np.asarray(mask, bool)
        shape = mask.shape
    full = None
    if shape is not None:
        full = ellipse_mask(fit, shape)
        if mask is not None:
            full &= mask
    return CorneaObservation(
        cx=fit.cx,
        cy=fit.cy,
        r_img=fit.major,
        frame=int(frame),
        mask=full,
        minor=fit.minor,
        angle=fit.angle,
    )


def observe_mask(mask: np.ndarray, frame: int) -> Tuple[EllipseFit, CorneaObservation]:
    """
    由虹膜掩码拟合椭圆并构造观测
    Fit an ellipse to an iris mask and build the observation
    """
    fit = fit_ellipse(boundary_points(mask))
    return fit, to_observation(fit, frame, mask)
