import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from ..geometry.model import (
    CameraIntrinsics,
    CorneaModel,
    CorneaObservation,
    ReflectedRays,
    RigidPose,
)
from ..geometry.placement import build_reflected_rays, place_cornea
from ..training.data import TrainingData
from ..utils.config import load_json
from ..utils.errors import ConfigError, ImageIOError, MissingGroundTruthError
from .ellipse import EllipseFit, boundary_points, fit_ellipse
from .image import as_rgb, load_image_16, load_mask, save_image_16, save_mask
from .observation import to_observation

__all__ = ["CaptureManifest", "CorneaDataset"]

PathLike = Union[str, Path]


@dataclass
class CaptureManifest:
    """
    真实采集清单：帧与掩码路径（相对清单文件）、相机内参、可选的预拟合椭圆
    Real-capture manifest: frame and mask paths (relative to the manifest), camera intrinsics, optional pre-fit ellipses
    """

    root: Path
    frames: List[str]
    masks: List[str]
    camera: CameraIntrinsics
    ellipses: Optional[List[Optional[EllipseFit]]] = None

    def __post_init__(self):
        if len(self.frames) != len(self.masks):
            raise ConfigError(
                f"manifest lists {len(self.frames)} frames but {len(self.masks)} masks"
            )
        if self.ellipses is not None and len(self.ellipses) != len(self.frames):
            raise ConfigError("manifest must give one ellipse record (or null) per frame")

    @staticmethod
    def from_json(path: PathLike) -> "CaptureManifest":
        """
        读取清单文件
        Read a manifest file

        格式 Format:
        {"camera": {...}, "frames": ["a.png", ...], "masks": ["a_mask.png", ...],
         "ellipses": [{"cx": ..., "cy": ..., "major": ..., "minor": ..., "angle": ...} | null, ...]}
        """
        path = Path(path)
        d = load_json(path)
        unknown = sorted(set(d) - {"camera", "frames", "masks", "ellipses"})
        if unknown:
            raise ConfigError(f"unknown keys in manifest {path}: {', '.join(unknown)}")
        if "camera" not in d:
            raise ConfigError(f"manifest {path} has no camera intrinsics")
        try:
            camera = CameraIntrinsics.from_dict(d["camera"])
            ellipses = None
            if d.get("ellipses") is not None:
                ellipses = [EllipseFit.from_dict(e) if e else None for e in d["ellipses"]]
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"invalid manifest {path}: {e}") from e
        return CaptureManifest(
            root=path.parent,
            frames=list(d.get("frames", [])),
            masks=list(d.get("masks", [])),
            camera=camera,
            ellipses=ellipses,
        )


@dataclass
class CorneaDataset:
    """
    角膜反射数据集：相机内参、各帧图像与观测，合成数据另带真值位姿
    Cornea-reflection dataset: camera intrinsics, per-frame images and observations, plus ground-truth
    poses for synthetic data
    """

    camera: CameraIntrinsics
    images: List[np.ndarray]
    observations: List[CorneaObservation]
    root: Optional[Path] = None
    ground_truth_poses: Optional[List[RigidPose]] = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.images) != len(self.observations):
            raise ValueError("one image per observation is required")

    def __len__(self) -> int:
        return len(self.observations)

    @property
    def frame_ids(self) -> List[int]:
        return [o.frame for o in self.observations]

    @staticmethod
    def load(path: PathLike) -> "CorneaDataset":
        """
        读取数据集：合成数据目录（含 observations.json）或真实采集清单文件
        Load a dataset: a synthetic-layout directory (with observations.json) or a capture manifest file
        """
        path = Path(path)
        if path.is_dir():
            if (path / "observations.json").is_file():
                return CorneaDataset._load_layout(path)
            if (path / "manifest.json").is_file():
                return CorneaDataset.from_manifest(CaptureManifest.from_json(path / "manifest.json"))
            raise ImageIOError(f"{path} contains neither observations.json nor manifest.json")
        if path.is_file():
            return CorneaDataset.from_manifest(CaptureManifest.from_json(path))
        raise ImageIOError(f"dataset {path} does not exist")

    @staticmethod
    def _load_layout(root: Path) -> "CorneaDataset":
        camera = CameraIntrinsics.from_dict(load_json(root / "camera.json"))
        records = load_json(root / "observations.json").get("frames", [])
        images, observations = [], []
        for rec in records:
            frame = int(rec["frame"])
            image = rec.get("image", f"frames/{frame:04d}.png")
            mask = rec.get("mask", f"masks/{frame:04d}.png")
            images.append(as_rgb(load_image_16(root / image)))
            observations.append(CorneaObservation.from_dict(rec, load_mask(root / mask)))
        gt_poses = None
        cornea = root / "ground_truth" / "cornea.json"
        if cornea.is_file():
            all_poses = [RigidPose.from_dict(p) for p in load_json(cornea)["poses"]]
            gt_poses = [all_poses[o.frame] for o in observations]
        logging.info("loaded %d frames from %s", len(observations), root)
        return CorneaDataset(camera, images, observations, root, gt_poses)

    @staticmethod
    def from_manifest(manifest: CaptureManifest) -> "CorneaDataset":
        """
        由采集清单构造数据集；未给出椭圆的帧由掩码边缘拟合
        Build a dataset from a capture manifest; frames without an ellipse record are fitted from the mask edge
        """
        images, observations = [], []
        for i, (frame, mask_path) in enumerate(zip(manifest.frames, manifest.masks)):
            image = as_rgb(load_image_16(manifest.root / frame))
            mask = load_mask(manifest.root / mask_path)
            if mask.shape != image.shape[:2]:
                raise ImageIOError(
                    f"mask {mask_path} is {mask.shape}, frame {frame} is {image.shape[:2]}"
                )
            fit = manifest.ellipses[i] if manifest.ellipses is not None else None
            if fit is None:
                fit = fit_ellipse(boundary_points(mask))
                logging.debug(
                    "frame %d: fitted ellipse center (%.2f, %.2f) radii (%.2f, %.2f) rms %.3f",
                    i, fit.cx, fit.cy, fit.major, fit.minor, fit.residual,
                )
            images.append(image)
            observations.append(to_observation(fit, i, mask))
        return CorneaDataset(manifest.camera, images, observations, manifest.root)

    def require_ground_truth(self) -> List[RigidPose]:
        if self.ground_truth_poses is None:
            raise MissingGroundTruthError(
                f"dataset {self.root} has no ground-truth poses; only synthetic datasets carry them"
            )
        return self.ground_truth_poses

    def poses(self, model: CorneaModel, ground_truth: bool = False) -> List[RigidPose]:
        """
        各帧角膜位姿：由观测初始化或取真值
        Per-frame cornea poses, initialized from the observations or taken from ground truth
        """
        if ground_truth:
            return list(self.require_ground_truth())
        return [place_cornea(model, self.camera, o) for o in self.observations]

    def training_data(self, model: CorneaModel, ground_truth_poses: bool = False) -> TrainingData:
        """
        预计算全部反射光线及其观测颜色
        Precompute every reflected ray with its observed color

        Args:
        - model (CorneaModel): 角膜模型。Cornea model.
        - ground_truth_poses (bool): 使用真值位姿构建光线。Build rays from ground-truth poses.

        Returns:
        - TrainingData: 训练数据。Training data.
        """
        poses = self.poses(model, ground_truth_poses)
        bundles, colors = [], []
        for row, (obs, image, pose) in enumerate(zip(self.observations, self.images, poses)):
            rays = build_reflected_rays(model, self.camera, obs, pose)
            colors.append(image[rays.pixels[:, 0], rays.pixels[:, 1]])
            rays.frames = np.full(len(rays), row, np.int64)
            bundles.append(rays)
        return TrainingData(
            rays=ReflectedRays.concatenate(bundles),
            colors=np.concatenate(colors) if colors else np.zeros((0, 3)),
            poses=poses,
            frame_ids=self.frame_ids,
            pose_source="ground_truth" if ground_truth_poses else "placed",
        )

    def write(self, out_dir: PathLike) -> Path:
        """
        以合成数据目录格式写出（16位帧、8位掩码、observations.json、camera.json）
        Write in the synthetic-dataset layout (16-bit frames, 8-bit masks, observations.json, camera.json)
        """
        out_dir = Path(out_dir)
        records = []
        for obs, image in zip(self.observations, self.images):
            name = f"{obs.frame:04d}.png"
            save_image_16(out_dir / "frames" / name, image)
            save_mask(out_dir / "masks" / name, obs.mask)
            rec = obs.to_dict()
            rec["image"] = f"frames/{name}"
            rec["mask"] = f"masks/{name}"
            records.append(rec)
        try:
            (out_dir / "observations.json").write_text(
                json.dumps({"frames": records}, indent=2, sort_keys=True), encoding="utf-8"
            )
            (out_dir / "camera.json").write_text(
                json.dumps(self.camera.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
            )
        except OSError as e:
            raise ImageIOError(f"cannot write dataset {out_dir}: {e}") from e
        return out_dir
