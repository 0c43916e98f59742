import io
import json
import logging
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Union

import numpy as np

from ..fields.scene import SceneField
from ..fields.texture import TextureField
from ..utils.errors import CheckpointError, ConfigError
from .config import TrainConfig
from .data import POSE_SOURCES, TrainingData
from .optim import AdamMoments
from .pose import PoseDelta

__all__ = ["TrainState", "save_checkpoint", "load_checkpoint", "CHECKPOINT_VERSION"]

CHECKPOINT_VERSION = 1

_GROUPS = ("scene", "texture", "pose")
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


@dataclass
class TrainState:
    """
    训练状态：两个场、各帧位姿修正、优化器矩估计、步数与随机源
    Training state: both fields, per-frame pose corrections, optimizer moments, step counter and random source
    """

    config: TrainConfig
    scene: SceneField
    texture: TextureField
    twists: np.ndarray
    """
    (F, 6) 各帧位姿修正（旋转向量、毫米平移）
    (F, 6) per-frame pose corrections (rotation vector, translation in mm)
    """
    pivots: np.ndarray
    frame_ids: List[int]
    moments: Dict[str, AdamMoments]
    step: int = 0
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    pose_source: str = "placed"
    """
    位姿修正所叠加的基准位姿来源，见 TrainingData.pose_source
    Source of the base poses the corrections compose onto, see TrainingData.pose_source
    """

    @staticmethod
    def initialize(config: TrainConfig, data: TrainingData) -> "TrainState":
        """
        由配置与训练数据构造初始状态
        Build the initial state from a config and the training data
        """
        scene = SceneField(
            config.bbox_lo, config.bbox_hi, config.scene_resolution,
            density_init=config.density_init,
        )
        texture = TextureField(config.texture_resolution, enabled=config.texture_decomposition)
        twists = np.zeros((data.n_frames, 6), np.float64)
        return TrainState(
            config=config,
            scene=scene,
            texture=texture,
            twists=twists,
            pivots=data.pivots.copy(),
            frame_ids=list(data.frame_ids),
            moments={
                "scene": AdamMoments.zeros_like(scene.params),
                "texture": AdamMoments.zeros_like(texture.params),
                "pose": AdamMoments.zeros_like(twists),
            },
            step=0,
            rng=np.random.default_rng(config.seed),
            pose_source=data.pose_source,
        )

    def pose_delta(self, row: int) -> PoseDelta:
        return PoseDelta(self.twists[row].copy(), self.pivots[row].copy())


def _member(zf: zipfile.ZipFile, name: str, array: np.ndarray):
    buf = io.BytesIO()
    np.lib.format.write_array(buf, np.asarray(array), allow_pickle=False)
    info = zipfile.ZipInfo(name + ".npy", date_time=_ZIP_DATE)
    info.compress_type = zipfile.ZIP_STORED
    info.external_attr = 0o644 << 16
    zf.writestr(info, buf.getvalue())


def save_checkpoint(state: TrainState, path: Union[str, Path]):
    """
    保存检查点：按固定顺序写入 .npy 成员的 zip 文件，内容相同则字节相同，可用 numpy.load 读取
    Save a checkpoint: a zip of .npy members written in a fixed order, byte-identical for identical
    content and readable with numpy.load

    Args:
    - state (TrainState): 训练状态。Training state.
    - path (Union[str, Path]): 输出路径。Output path.
    """
    path = Path(path)
    meta = {
        "version": CHECKPOINT_VERSION,
        "config": state.config.to_dict(),
        "step": state.step,
        "frame_ids": [int(i) for i in state.frame_ids],
        "pose_source": state.pose_source,
        "bbox_lo": state.scene.lo.tolist(),
        "bbox_hi": state.scene.hi.tolist(),
        "scene_resolution": list(state.scene.resolution),
        "texture_resolution": state.texture.resolution,
        "texture_enabled": state.texture.enabled,
        "rng": state.rng.bit_generator.state,
        "moment_counts": {g: state.moments[g].count for g in _GROUPS},
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
            _member(zf, "meta", np.array(json.dumps(meta, sort_keys=True)))
            _member(zf, "scene", state.scene.params)
            _member(zf, "texture", state.texture.params)
            _member(zf, "twists", state.twists)
            _member(zf, "pivots", state.pivots)
            for g in _GROUPS:
                _member(zf, f"{g}_m", state.moments[g].m)
                _member(zf, f"{g}_v", state.moments[g].v)
    except OSError as e:
        raise CheckpointError(f"cannot write checkpoint {path}: {e}") from e
    logging.debug("checkpoint saved to %s at step %d", path, state.step)


def load_checkpoint(path: Union[str, Path]) -> TrainState:
    """
    读取检查点，恢复的状态继续训练与未中断时逐位一致
    Load a checkpoint; training resumed from it matches an uninterrupted run bit for bit

    Args:
    - path (Union[str, Path]): 检查点路径。Checkpoint path.

    Returns:
    - TrainState: 训练状态。Training state.
    """
    path = Path(path)
    try:
        with np.load(path, allow_pickle=False) as npz:
            arrays = {k: npz[k] for k in npz.files}
    except (OSError, ValueError, zipfile.BadZipFile) as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    try:
        meta = json.loads(str(arrays["meta"][()]))
        if meta["version"] != CHECKPOINT_VERSION:
            raise CheckpointError(
                f"checkpoint {path} has version {meta['version']}, expected {CHECKPOINT_VERSION}"
            )
        config = TrainConfig.from_dict(meta["config"])
        if meta["pose_source"] not in POSE_SOURCES:
            raise CheckpointError(f"checkpoint {path} has unknown pose source {meta['pose_source']!r}")
        scene = SceneField(
            meta["bbox_lo"], meta["bbox_hi"], meta["scene_resolution"], arrays["scene"]
        )
        texture = TextureField(
            meta["texture_resolution"], arrays["texture"], meta["texture_enabled"]
        )
        moments = {
            g: AdamMoments(arrays[f"{g}_m"], arrays[f"{g}_v"], int(meta["moment_counts"][g]))
            for g in _GROUPS
        }
        rng = np.random.default_rng()
        rng.bit_generator.state = meta["rng"]
        return TrainState(
            config=config,
            scene=scene,
            texture=texture,
            twists=arrays["twists"],
            pivots=arrays["pivots"],
            frame_ids=[int(i) for i in meta["frame_ids"]],
            moments=moments,
            step=int(meta["step"]),
            rng=rng,
            pose_source=str(meta["pose_source"]),
        )
    except (KeyError, ValueError, TypeError, ConfigError) as e:
        raise CheckpointError(f"checkpoint {path} is corrupt: {e}") from e
