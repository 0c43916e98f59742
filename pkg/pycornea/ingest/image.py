import logging
from pathlib import Path
from typing import Union

import cv2
import numpy as np
from PIL import Image

from ..utils.errors import ImageIOError

__all__ = [
    "load_image_16",
    "save_image_16",
    "save_preview_8",
    "load_mask",
    "save_mask",
    "as_rgb",
]

PathLike = Union[str, Path]


def _bgr2rgb(img: np.ndarray) -> np.ndarray:
    if img.ndim == 3 and img.shape[2] == 4:
        return cv2.cvtColor(img, cv2.COLOR_BGRA2RGB)
    if img.ndim == 3 and img.shape[2] == 3:
        return cv2.cvtColor(img, cv2.COLOR_BGR2RGB)
    return img


def _rgb2bgr(img: np.ndarray) -> np.ndarray:
    if img.ndim == 3 and img.shape[2] == 3:
        return cv2.cvtColor(img, cv2.COLOR_RGB2BGR)
    return img


def load_image_16(path: PathLike) -> np.ndarray:
    """
    读取16位（或8位）PNG图像，返回线性 [0, 1] 浮点数组
    Read a 16-bit (or 8-bit) PNG image as linear [0, 1] floats

    Args:
    - path (PathLike): 图像路径。Image path.

    Returns:
    - np.ndarray: (H, W) 灰度或 (H, W, 3) RGB 图像。(H, W) grayscale or (H, W, 3) RGB image.
    """
    path = Path(path)
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise ImageIOError(f"cannot read image {path}")
    img = _bgr2rgb(img)
    if img.dtype == np.uint16:
        return img.astype(np.float64) / 65535.0
    if img.dtype == np.uint8:
        logging.warning("%s is an 8-bit image, upscaling to [0, 1] floats loses precision", path)
        return img.astype(np.float64) / 255.0
    raise ImageIOError(f"unsupported pixel type {img.dtype} in {path}")


def save_image_16(path: PathLike, img: np.ndarray):
    """
    将 [0, 1] 浮点图像量化为16位并写出PNG
    Quantize a [0, 1] float image to 16 bits and write it as PNG

    Args:
    - path (PathLike): 输出路径。Output path.
    - img (np.ndarray): (H, W) 或 (H, W, 3) 图像。(H, W) or (H, W, 3) image.
    """
    path = Path(path)
    q = np.round(np.clip(np.asarray(img, np.float64), 0.0, 1.0) * 65535.0).astype(np.uint16)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        ok = cv2.imwrite(str(path), _rgb2bgr(q))
    except (OSError, cv2.error) as e:
        raise ImageIOError(f"cannot write image {path}: {e}") from e
    if not ok:
        raise ImageIOError(f"cannot write image {path}")


def save_preview_8(path: PathLike, img: np.ndarray):
    """
    写出8位预览图（如累积不透明度）
    Write an 8-bit preview image (e.g. accumulation)
    """
    path = Path(path)
    q = np.round(np.clip(np.asarray(img, np.float64), 0.0, 1.0) * 255.0).astype(np.uint8)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(q).save(path)
    except OSError as e:
        raise ImageIOError(f"cannot write image {path}: {e}") from e


def load_mask(path: PathLike) -> np.ndarray:
    """
    读取二值掩码，非零像素为 True
    Read a binary mask, nonzero pixels are True
    """
    path = Path(path)
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise ImageIOError(f"cannot read mask {path}")
    if img.ndim == 3:
        img = img.max(axis=2)
    return img > 0


def save_mask(path: PathLike, mask: np.ndarray):
    """
    将布尔掩码写为8位二值PNG（0/255）
    Write a boolean mask as an 8-bit binary PNG (0/255)
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        ok = cv2.imwrite(str(path), np.where(mask, 255, 0).astype(np.uint8))
    except (OSError, cv2.error) as e:
        raise ImageIOError(f"cannot write mask {path}: {e}") from e
    if not ok:
        raise ImageIOError(f"cannot write mask {path}")


def as_rgb(img: np.ndarray) -> np.ndarray:
    """
    灰度图复制为三通道
    Replicate a grayscale image into three channels
    """
    if img.ndim == 2:
        return np.repeat(img[..., None], 3, axis=2)
    return img
