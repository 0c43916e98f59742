"""
联合优化模块：纹理合成、重建与径向损失、逐帧角膜位姿修正与训练循环
Joint optimization module: texture composition, reconstruction and radial losses, per-frame cornea pose refinement and the training loop
"""

from .config import COMPOSITION_MODES, TrainConfig
from .data import POSE_SOURCES, TrainingData
from .losses import (
    compose,
    compose_backward,
    radial_backward,
    radial_loss,
    radial_terms,
    recon_loss,
    recon_loss_backward,
    rotate_disks,
)
from .optim import AdamMoments, adam_update
from .pose import PoseDelta, apply_pose, apply_poses, apply_poses_backward
from .state import CHECKPOINT_VERSION, TrainState, load_checkpoint, save_checkpoint
from .trainer import (
    Batch,
    Draws,
    LossReport,
    ObjectiveResult,
    draw,
    fit,
    objective,
    pose_errors,
    predict,
    train_step,
    training_psnr,
)

__all__ = [
    "COMPOSITION_MODES",
    "TrainConfig",
    "TrainingData",
    "POSE_SOURCES",
    "compose",
    "compose_backward",
    "radial_backward",
    "radial_loss",
    "radial_terms",
    "recon_loss",
    "recon_loss_backward",
    "rotate_disks",
    "AdamMoments",
    "adam_update",
    "PoseDelta",
    "apply_pose",
    "apply_poses",
    "apply_poses_backward",
    "CHECKPOINT_VERSION",
    "TrainState",
    "load_checkpoint",
    "save_checkpoint",
    "Batch",
    "Draws",
    "LossReport",
    "ObjectiveResult",
    "draw",
    "fit",
    "objective",
    "pose_errors",
    "predict",
    "train_step",
    "training_psnr",
]
