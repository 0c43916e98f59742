from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from ..geometry.camera import orbit_cameras
from ..geometry.model import CameraIntrinsics, RigidPose
from ..synth.specs import SynthConfig
from ..training.config import TrainConfig
from ..utils.config import dataclass_from_dict, load_json
from ..utils.errors import CheckpointError, ConfigError, ImageIOError, OutputIOError

__all__ = [
    "SUBCOMMANDS",
    "SECTIONS",
    "EvalConfig",
    "AblationConfig",
    "ProjectConfig",
    "RunConfig",
    "load_project_config",
]

SUBCOMMANDS = ("synth", "train", "render", "eval", "ablate", "ingest")
SECTIONS = ("camera", "scene", "iris", "trajectory", "synth", "train", "eval", "ablation")


@dataclass(frozen=True)
class EvalConfig:
    """
    新视角评估相机：绕场景圆弧排布（对应配置文件的 eval 节）
    Novel-view evaluation cameras on an arc around the scene (the `eval` section of a config file)
    """

    views: int = 4
    width: int = 64
    height: int = 64
    fov: float = 70.0
    """
    水平视场角（度）
    Horizontal field of view (degrees)
    """
    target: Tuple[float, float, float] = (0.0, 0.0, 290.0)
    start: Tuple[float, float, float] = (0.0, 0.0, 550.0)
    """
    圆弧中点处的相机位置，默认位于眼睛一侧向场景看去
    Camera position at the middle of the arc, by default on the eye's side looking at the scene
    """
    span: float = 20.0
    pitch: float = 0.0

    def __post_init__(self):
        if self.views < 1:
            raise ValueError("eval needs at least one view")
        if self.width < 11 or self.height < 11:
            raise ValueError("eval images must be at least 11x11 for SSIM")
        if not 0.0 < self.fov < 180.0:
            raise ValueError(f"fov must be in (0, 180) degrees, got {self.fov}")

    @property
    def intrinsics(self) -> CameraIntrinsics:
        return CameraIntrinsics.from_fov(self.width, self.height, self.fov)

    def cameras(self, count: Optional[int] = None) -> List[RigidPose]:
        """
        评估相机位姿；count 给定时在同一圆弧上改用 count 个相机
        Evaluation camera poses; with `count` the same arc carries `count` cameras instead
        """
        return orbit_cameras(
            self.target, self.start, count or self.views, self.span, self.pitch
        )


@dataclass(frozen=True)
class AblationConfig:
    """
    位姿优化消融：各噪声水平下分别训练开启与关闭位姿优化的两组（对应配置文件的 ablation 节）
    Pose-optimization ablation: for each noise level train with and without pose optimization
    (the `ablation` section of a config file)
    """

    noise_levels: Tuple[float, ...] = (0.0, 0.05, 0.1)
    steps: Optional[int] = None
    """
    每组的训练步数，默认沿用 train 节
    Training steps per arm, the `train` section's value by default
    """

    def __post_init__(self):
        if len(self.noise_levels) == 0:
            raise ConfigError("ablation needs at least one noise level")
        if any(s < 0 for s in self.noise_levels):
            raise ConfigError(f"noise levels must be non-negative, got {self.noise_levels}")
        if self.steps is not None and self.steps < 0:
            raise ConfigError("ablation steps must be non-negative")


@dataclass
class ProjectConfig:
    """
    项目配置文件：全部节均可缺省
    Project configuration file, every section optional
    """

    sections: Dict[str, Any] = field(default_factory=dict)
    path: Optional[Path] = None

    @property
    def synth(self) -> SynthConfig:
        return SynthConfig.from_sections(self.sections)

    @property
    def train(self) -> TrainConfig:
        return TrainConfig.from_dict(self.sections.get("train"))

    @property
    def eval(self) -> EvalConfig:
        return dataclass_from_dict(EvalConfig, self.sections.get("eval"), "eval")

    @property
    def ablation(self) -> AblationConfig:
        return dataclass_from_dict(AblationConfig, self.sections.get("ablation"), "ablation")

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.sections)


def load_project_config(path: Optional[Path]) -> ProjectConfig:
    """
    读取项目配置文件，未知节报错；path 为 None 时返回全默认配置
    Read a project config file, rejecting unknown sections; all defaults when `path` is None
    """
    if path is None:
        return ProjectConfig()
    sections = load_json(path)
    unknown = sorted(set(sections) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown sections in {path}: {', '.join(unknown)}")
    config = ProjectConfig(sections, Path(path))
    # parse every section eagerly
    config.synth, config.train, config.eval, config.ablation
    return config


@dataclass(frozen=True)
class RunConfig:
    """
    一次命令行运行的参数
    Arguments of one command-line run
    """

    subcommand: str
    out: Path
    dataset: Optional[Path] = None
    config_path: Optional[Path] = None
    checkpoint: Optional[Path] = None
    seed: Optional[int] = None
    noise: Optional[float] = None
    steps: Optional[int] = None
    no_texture: bool = False
    no_pose_opt: bool = False
    no_radial: bool = False
    orbit: int = 0
    gt_poses: bool = False
    verbose: bool = False

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(
                f"unknown subcommand {self.subcommand!r}, expected one of {SUBCOMMANDS}"
            )
        if self.noise is not None and self.noise < 0:
            raise ConfigError(f"--noise must be non-negative, got {self.noise}")
        if self.steps is not None and self.steps < 0:
            raise ConfigError(f"--steps must be non-negative, got {self.steps}")
        if self.orbit < 0:
            raise ConfigError(f"--orbit must be non-negative, got {self.orbit}")

    @staticmethod
    def from_args(args) -> "RunConfig":
        return RunConfig(
            subcommand=args.command,
            out=Path(args.out),
            dataset=Path(args.dataset) if getattr(args, "dataset", None) else None,
            config_path=Path(args.config) if getattr(args, "config", None) else None,
            checkpoint=Path(args.checkpoint) if getattr(args, "checkpoint", None) else None,
            seed=getattr(args, "seed", None),
            noise=getattr(args, "noise", None),
            steps=getattr(args, "steps", None),
            no_texture=getattr(args, "no_texture", False),
            no_pose_opt=getattr(args, "no_pose_opt", False),
            no_radial=getattr(args, "no_radial", False),
            orbit=getattr(args, "orbit", 0) or 0,
            gt_poses=getattr(args, "gt_poses", False),
            verbose=getattr(args, "verbose", False),
        )

    def validate(self):
        """
        开始工作前检查输入路径
        Check input paths before any work begins
        """
        if self.config_path is not None and not self.config_path.is_file():
            raise ImageIOError(f"config file {self.config_path} does not exist")
        if self.subcommand in ("train", "eval", "ingest"):
            if self.dataset is None:
                raise ConfigError(f"'{self.subcommand}' requires --dataset")
            if not self.dataset.exists():
                raise ImageIOError(f"dataset {self.dataset} does not exist")
        if self.subcommand in ("render", "eval"):
            if self.checkpoint is None:
                raise ConfigError(f"'{self.subcommand}' requires --checkpoint")
            if not self.checkpoint.is_file():
                raise CheckpointError(f"checkpoint {self.checkpoint} does not exist")
        if self.out.exists() and not self.out.is_dir():
            raise OutputIOError(f"output {self.out} exists and is not a directory")

    def project(self) -> ProjectConfig:
        return load_project_config(self.config_path)

    def synth_config(self, project: ProjectConfig) -> SynthConfig:
        cfg = project.synth
        if self.seed is not None:
            cfg = replace(cfg, seed=self.seed)
        if self.noise is not None:
            cfg = replace(cfg, noise=self.noise)
        return cfg

    def train_config(self, project: ProjectConfig) -> TrainConfig:
        """
        train 节叠加命令行的种子、步数与消融开关
        The `train` section with the command line's seed, steps and ablation switches applied
        """
        cfg = project.train
        if self.seed is not None:
            cfg = replace(cfg, seed=self.seed)
        if self.steps is not None:
            cfg = replace(cfg, steps=self.steps)
        return cfg.with_ablation(self.no_texture, self.no_pose_opt, self.no_radial)
