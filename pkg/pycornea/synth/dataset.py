import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from ..geometry.model import CorneaModel, CorneaObservation, RigidPose
from ..geometry.placement import pose_from_gaze
from ..ingest.image import save_image_16, save_mask
from ..utils.config import load_json
from ..utils.errors import ImageIOError, MissingGroundTruthError
from .render import render_frame
from .specs import IrisSpec, SceneSpec, SynthConfig, TrajectorySpec

__all__ = ["GroundTruth", "make_dataset", "load_ground_truth", "corrupt_radii"]

GROUND_TRUTH_DIR = "ground_truth"


def corrupt_radii(radii: np.ndarray, noise: float, rng: np.random.Generator) -> np.ndarray:
    """
    半径乘性均匀噪声 r (1 + sigma u)，u ~ U[-1, 1]
    Multiplicative uniform radius noise r (1 + sigma u), u ~ U[-1, 1]
    """
    u = rng.uniform(-1.0, 1.0, len(radii))
    return np.asarray(radii, np.float64) * (1.0 + noise * u)


def _frame_name(frame: int) -> str:
    return f"{frame:04d}.png"


def _write_json(path: Path, data):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(data, indent=2, sort_keys=True), encoding="utf-8")
    except OSError as e:
        raise ImageIOError(f"cannot write {path}: {e}") from e


def make_dataset(
    config: SynthConfig,
    out_dir: Union[str, Path],
    model: Optional[CorneaModel] = None,
) -> Path:
    """
    渲染全部帧并写出数据集目录：frames/（16位）、masks/（8位）、observations.json（含半径噪声）、
    camera.json，以及仅用于评估的 ground_truth/
    Render every frame and write the dataset directory: frames/ (16-bit), masks/ (8-bit),
    observations.json (radius noise applied), camera.json and the evaluation-only ground_truth/

    Args:
    - config (SynthConfig): 合成设置。Synthesis settings.
    - out_dir (Union[str, Path]): 输出目录。Output directory.
    - model (CorneaModel, optional): 角膜模型，默认解剖学常数。Cornea model, anatomical defaults by default.

    Returns:
    - Path: 数据集目录。Dataset directory.
    """
    out_dir = Path(out_dir)
    model = model or CorneaModel()
    intr = config.camera
    trajectory = config.trajectory
    poses = [pose_from_gaze(model, c, g) for c, g in zip(trajectory.centers, trajectory.gazes)]

    exact: List[CorneaObservation] = []
    for frame, pose in enumerate(poses):
        rendered = render_frame(
            config.scene, config.iris, model, pose, intr, frame=frame, skin=config.skin
        )
        save_image_16(out_dir / "frames" / _frame_name(frame), rendered.linear)
        save_mask(out_dir / "masks" / _frame_name(frame), rendered.observation.mask)
        exact.append(rendered.observation)
        logging.debug(
            "frame %d: center (%.2f, %.2f), r_img %.3f px, %d cornea pixels",
            frame, rendered.fit.cx, rendered.fit.cy, rendered.fit.major,
            int(rendered.observation.mask.sum()),
        )

    rng = np.random.default_rng(config.seed)
    radii = corrupt_radii(np.array([o.r_img for o in exact]), config.noise, rng)

    def records(observations, radii_used):
        out = []
        for obs, r in zip(observations, radii_used):
            d = obs.to_dict()
            d["r_img"] = float(r)
            d["image"] = f"frames/{_frame_name(obs.frame)}"
            d["mask"] = f"masks/{_frame_name(obs.frame)}"
            out.append(d)
        return {"frames": out}

    _write_json(out_dir / "observations.json", records(exact, radii))
    _write_json(out_dir / "camera.json", intr.to_dict())
    gt = out_dir / GROUND_TRUTH_DIR
    _write_json(gt / "observations.json", records(exact, [o.r_img for o in exact]))
    _write_json(gt / "scene.json", config.scene.to_dict())
    _write_json(gt / "iris.json", config.iris.to_dict())
    _write_json(gt / "trajectory.json", trajectory.to_dict())
    _write_json(
        gt / "cornea.json",
        {"model": model.to_dict(), "poses": [p.to_dict() for p in poses]},
    )
    _write_json(gt / "synth.json", {"noise": config.noise, "seed": config.seed})
    logging.info(
        "wrote %d frames to %s (radius noise %.3f, seed %d)",
        len(poses), out_dir, config.noise, config.seed,
    )
    return out_dir


@dataclass
class GroundTruth:
    """
    合成数据集的真值
    Ground truth of a synthetic dataset
    """

    scene: SceneSpec
    iris: IrisSpec
    trajectory: TrajectorySpec
    model: CorneaModel
    poses: List[RigidPose]
    observations: List[CorneaObservation]


def load_ground_truth(dataset: Union[str, Path]) -> GroundTruth:
    """
    读取数据集目录中的真值
    Read the ground truth stored in a dataset directory
    """
    root = Path(dataset) / GROUND_TRUTH_DIR
    if not root.is_dir():
        raise MissingGroundTruthError(
            f"{dataset} has no {GROUND_TRUTH_DIR}/ directory; only synthetic datasets carry "
            "ground truth, real captures cannot be evaluated against a reference"
        )
    cornea = load_json(root / "cornea.json")
    obs = load_json(root / "observations.json")
    return GroundTruth(
        scene=SceneSpec.from_dict(load_json(root / "scene.json")),
        iris=IrisSpec.from_dict(load_json(root / "iris.json")),
        trajectory=TrajectorySpec.from_dict(load_json(root / "trajectory.json")),
        model=CorneaModel(**cornea["model"]),
        poses=[RigidPose.from_dict(p) for p in cornea["poses"]],
        observations=[CorneaObservation.from_dict(o) for o in obs["frames"]],
    )
