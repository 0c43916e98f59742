from dataclasses import dataclass, replace
from typing import Tuple

from ..fields.render import Sampling
from ..utils.config import dataclass_from_dict, dataclass_to_dict

__all__ = ["TrainConfig", "COMPOSITION_MODES"]

COMPOSITION_MODES = ("additive", "alpha")


@dataclass(frozen=True)
class TrainConfig:
    """
    联合优化的配置（对应配置文件的 train 节）
    Joint-optimization settings (the `train` section of a config file)
    """

    bbox_lo: Tuple[float, float, float] = (-180.0, -140.0, 180.0)
    """
    场景包围盒最小角点（毫米，相机坐标系）
    Scene bounding-box minimum corner (mm, camera frame)
    """
    bbox_hi: Tuple[float, float, float] = (180.0, 140.0, 420.0)
    scene_resolution: Tuple[int, int, int] = (48, 40, 32)
    texture_resolution: int = 32
    density_init: float = -5.0
    """
    场景密度通道的初始原始值
    Initial raw value of the scene density channel
    """
    near: float = 100.0
    far: float = 450.0
    n_samples: int = 64
    stratified: bool = True
    steps: int = 2000
    batch_size: int = 1024
    lr_scene: float = 1e-2
    lr_texture: float = 1e-2
    lr_pose: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lambda_radial: float = 0.1
    pose_warmup: float = 0.1
    """
    位姿冻结的步数比例
    Fraction of steps during which poses stay frozen
    """
    translation_scale_mm: float = 100.0
    """
    优化器中平移变量的单位（毫米）
    Unit of the optimizer's translation variables (mm)
    """
    composition: str = "additive"
    optimize_pose: bool = True
    texture_decomposition: bool = True
    seed: int = 0
    log_every: int = 100

    def __post_init__(self):
        if len(self.bbox_lo) != 3 or len(self.bbox_hi) != 3:
            raise ValueError("bbox corners must have 3 components")
        if any(h <= l for l, h in zip(self.bbox_lo, self.bbox_hi)):
            raise ValueError("bbox_hi must exceed bbox_lo on every axis")
        if len(self.scene_resolution) != 3 or min(self.scene_resolution) < 2:
            raise ValueError("scene_resolution must be 3 values >= 2")
        if self.texture_resolution < 2:
            raise ValueError("texture_resolution must be >= 2")
        for name in ("steps", "lr_scene", "lr_texture", "lr_pose", "lambda_radial", "eps"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.pose_warmup <= 1.0:
            raise ValueError("pose_warmup must be in [0, 1]")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("Adam betas must be in [0, 1)")
        if self.translation_scale_mm <= 0:
            raise ValueError("translation_scale_mm must be positive")
        if self.composition not in COMPOSITION_MODES:
            raise ValueError(
                f"composition must be one of {COMPOSITION_MODES}, got {self.composition!r}"
            )
        # validates near/far/n_samples
        self.sampling

    @property
    def sampling(self) -> Sampling:
        return Sampling(self.near, self.far, self.n_samples, self.stratified)

    @property
    def warmup_steps(self) -> int:
        return int(round(self.pose_warmup * self.steps))

    def with_ablation(
        self, no_texture: bool = False, no_pose_opt: bool = False, no_radial: bool = False
    ) -> "TrainConfig":
        """
        应用消融开关
        Apply ablation switches

        Args:
        - no_texture (bool): 纹理冻结为黑色。Freeze the texture at black.
        - no_pose_opt (bool): 位姿学习率置零。Zero the pose learning rate.
        - no_radial (bool): 径向正则权重置零。Zero the radial-regularizer weight.
        """
        cfg = self
        if no_texture:
            cfg = replace(cfg, texture_decomposition=False)
        if no_pose_opt:
            cfg = replace(cfg, optimize_pose=False, lr_pose=0.0)
        if no_radial:
            cfg = replace(cfg, lambda_radial=0.0)
        return cfg

    @staticmethod
    def from_dict(d: dict) -> "TrainConfig":
        return dataclass_from_dict(TrainConfig, d, "train")

    def to_dict(self) -> dict:
        return dataclass_to_dict(self)
