from dataclasses import dataclass

import numpy as np

__all__ = ["AdamMoments", "adam_update"]


@dataclass
class AdamMoments:
    """
    一个参数组的Adam一阶、二阶矩与更新计数
    Adam first/second moments and update count of one parameter group
    """

    m: np.ndarray
    v: np.ndarray
    count: int = 0

    @staticmethod
    def zeros_like(params: np.ndarray) -> "AdamMoments":
        return AdamMoments(np.zeros_like(params), np.zeros_like(params), 0)


def adam_update(
    params: np.ndarray,
    grad: np.ndarray,
    moments: AdamMoments,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
):
    """
    原地执行一步带偏差修正的Adam更新
    One bias-corrected Adam update, in place

    Args:
    - params (np.ndarray): 参数，原地修改。Parameters, modified in place.
    - grad (np.ndarray): 梯度。Gradient.
    - moments (AdamMoments): 该组的矩估计，原地修改。Moments of the group, modified in place.
    - lr (float): 学习率。Learning rate.
    """
    moments.count += 1
    moments.m *= beta1
    moments.m += (1.0 - beta1) * grad
    moments.v *= beta2
    moments.v += (1.0 - beta2) * grad * grad
    m_hat = moments.m / (1.0 - beta1**moments.count)
    v_hat = moments.v / (1.0 - beta2**moments.count)
    params -= lr * m_hat / (np.sqrt(v_hat) + eps)
