import cv2
import numpy as np

__all__ = ["ssim", "psnr", "PSNR_CAP_DB"]

PSNR_CAP_DB = 100.0
"""
完全相同的图像返回的PSNR上限（分贝）
PSNR reported for identical images (dB)
"""

_K1 = 0.01
_K2 = 0.03
_WINDOW = 11
_SIGMA = 1.5


def _blur(x: np.ndarray) -> np.ndarray:
    return cv2.GaussianBlur(
        x, (_WINDOW, _WINDOW), _SIGMA, sigmaY=_SIGMA, borderType=cv2.BORDER_REFLECT
    )


def ssim(a: np.ndarray, b: np.ndarray, data_range: float = 1.0) -> float:
    """
    结构相似度：11x11高斯窗（sigma=1.5），K1=0.01，K2=0.03，仅统计完整窗口，多通道取平均
    Structural similarity with an 11x11 Gaussian window (sigma=1.5), K1=0.01, K2=0.03, full windows only,
    averaged over channels

    Args:
    - a (np.ndarray): (H, W) 或 (H, W, C) 图像。(H, W) or (H, W, C) image.
    - b (np.ndarray): 同形图像。Image of the same shape.
    - data_range (float): 像素取值范围。Pixel value range.

    Returns:
    - float: SSIM，取值 [-1, 1]。SSIM in [-1, 1].
    """
    a = np.asarray(a, np.float64)
    b = np.asarray(b, np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    if a.shape[0] < _WINDOW or a.shape[1] < _WINDOW:
        raise ValueError(f"images must be at least {_WINDOW}x{_WINDOW}, got {a.shape[:2]}")
    if a.ndim == 2:
        a = a[..., None]
        b = b[..., None]
    c1 = (_K1 * data_range) ** 2
    c2 = (_K2 * data_range) ** 2
    half = _WINDOW // 2
    scores = []
    for c in range(a.shape[-1]):
        x = np.ascontiguousarray(a[..., c])
        y = np.ascontiguousarray(b[..., c])
        mu_x = _blur(x)
        mu_y = _blur(y)
        sxx = _blur(x * x) - mu_x * mu_x
        syy = _blur(y * y) - mu_y * mu_y
        sxy = _blur(x * y) - mu_x * mu_y
        num = (2.0 * mu_x * mu_y + c1) * (2.0 * sxy + c2)
        den = (mu_x * mu_x + mu_y * mu_y + c1) * (sxx + syy + c2)
        smap = num / den
        scores.append(smap[half:-half, half:-half].mean())
    return float(np.mean(scores))


def psnr(a: np.ndarray, b: np.ndarray, data_range: float = 1.0) -> float:
    """
    峰值信噪比（分贝），完全相同时返回 PSNR_CAP_DB
    Peak signal-to-noise ratio in dB, PSNR_CAP_DB for identical inputs
    """
    a = np.asarray(a, np.float64)
    b = np.asarray(b, np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shapes differ: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("psnr of empty arrays")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return float(min(PSNR_CAP_DB, 10.0 * np.log10(data_range**2 / mse)))
