import numpy as np

__all__ = ["hat", "so3_exp", "so3_exp_derivatives", "rotation_between"]

_SMALL_ANGLE = 1e-4


def hat(w: np.ndarray) -> np.ndarray:
    """
    向量的反对称矩阵 [w]x
    Skew-symmetric matrix [w]x of a 3-vector
    """
    x, y, z = w
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]], np.float64)


def so3_exp(w) -> np.ndarray:
    """
    旋转向量的指数映射（Rodrigues公式）
    Exponential map of a rotation vector (Rodrigues formula)
    """
    w = np.asarray(w, dtype=np.float64)
    theta = float(np.linalg.norm(w))
    W = hat(w)
    if theta < _SMALL_ANGLE:
        # Taylor expansion to third order
        a = 1.0 - theta**2 / 6.0
        b = 0.5 - theta**2 / 24.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + a * W + b * (W @ W)


def so3_exp_derivatives(w) -> np.ndarray:
    """
    指数映射对旋转向量各分量的导数
    Derivatives of the exponential map with respect to each rotation-vector component

    Returns:
    - np.ndarray: (3, 3, 3)，第 k 个切片为 dR/dw_k。(3, 3, 3), slice k is dR/dw_k.
    """
    w = np.asarray(w, dtype=np.float64)
    theta2 = float(w @ w)
    E = np.eye(3)
    out = np.empty((3, 3, 3), np.float64)
    if theta2 < _SMALL_ANGLE**2:
        W = hat(w)
        for k in range(3):
            Ek = hat(E[k])
            out[k] = Ek + 0.5 * (Ek @ W + W @ Ek)
        return out
    R = so3_exp(w)
    W = hat(w)
    I_R = np.eye(3) - R
    for k in range(3):
        out[k] = (w[k] * W + hat(np.cross(w, I_R @ E[k]))) @ R / theta2
    return out


def rotation_between(a, b) -> np.ndarray:
    """
    将单位向量 a 转到单位向量 b 的最小旋转
    Minimal rotation taking unit vector a onto unit vector b
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    axis = np.cross(a, b)
    s = float(np.linalg.norm(axis))
    c = float(np.clip(a @ b, -1.0, 1.0))
    if s < 1e-12:
        if c > 0:
            return np.eye(3)
        # antiparallel: rotate pi about any axis orthogonal to a
        ortho = np.cross(a, [1.0, 0.0, 0.0])
        if np.linalg.norm(ortho) < 1e-6:
            ortho = np.cross(a, [0.0, 1.0, 0.0])
        ortho /= np.linalg.norm(ortho)
        return so3_exp(np.pi * ortho)
    return so3_exp(axis / s * np.arctan2(s, c))
