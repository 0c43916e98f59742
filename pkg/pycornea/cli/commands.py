import json
import logging
import warnings
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from ..fields.render import render_direct
from ..geometry.model import CorneaModel
from ..ingest.dataset import CorneaDataset
from ..ingest.image import save_image_16, save_preview_8
from ..synth.dataset import load_ground_truth, make_dataset
from ..synth.render import render_ground_truth_view
from ..training.config import TrainConfig
from ..training.state import TrainState, load_checkpoint, save_checkpoint
from ..training.trainer import fit, pose_errors, training_psnr
from ..utils.config import dataclass_to_dict
from ..utils.errors import OutputIOError
from ..utils.metrics import psnr, ssim
from ..utils.report import append_report, write_table
from .config import EvalConfig, ProjectConfig, RunConfig

__all__ = [
    "CHECKPOINT_NAME",
    "LOSS_LOG_NAME",
    "REPORT_NAME",
    "RESULTS_NAME",
    "RESULT_COLUMNS",
    "cmd_synth",
    "cmd_train",
    "cmd_render",
    "cmd_eval",
    "cmd_ablate",
    "cmd_ingest",
    "evaluate_views",
    "run",
]

CHECKPOINT_NAME = "checkpoint.npz"
LOSS_LOG_NAME = "loss.csv"
REPORT_NAME = "reports.jsonl"
RESULTS_NAME = "results.md"
RESULT_COLUMNS = (
    "noise",
    "arm",
    "ssim",
    "psnr",
    "training_psnr",
    "initial_center_mm",
    "refined_center_mm",
)


def _emit(summary: Dict[str, Any]):
    print(json.dumps(summary, indent=2, sort_keys=True))


def _write_summary(path: Path, summary: Dict[str, Any]):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8")
    except OSError as e:
        raise OutputIOError(f"cannot write {path}: {e}") from e


def cmd_synth(run: RunConfig, project: ProjectConfig) -> Path:
    """
    生成合成数据集并打印清单摘要
    Generate a synthetic dataset and print a manifest summary

    Args:
    - run (RunConfig): 命令行参数，--seed 与 --noise 覆盖 synth 节。Command line, --seed and --noise override the `synth` section.
    - project (ProjectConfig): 项目配置。Project configuration.

    Returns:
    - Path: 数据集目录。Dataset directory.
    """
    cfg = run.synth_config(project)
    cfg.scene.check_inside(project.train.bbox_lo, project.train.bbox_hi)
    out = make_dataset(cfg, run.out)
    _emit(
        {
            "dataset": str(out),
            "frames": cfg.trajectory.frame_count,
            "noise": cfg.noise,
            "seed": cfg.seed,
            "camera": cfg.camera.to_dict(),
            "ground_truth": str(out / "ground_truth"),
        }
    )
    return out


def _train(
    dataset: CorneaDataset,
    config: TrainConfig,
    out: Path,
    gt_poses: bool = False,
    model: Optional[CorneaModel] = None,
) -> Dict[str, Any]:
    model = model or CorneaModel()
    data = dataset.training_data(model, ground_truth_poses=gt_poses)
    state = fit(data, config, loss_log=out / LOSS_LOG_NAME)
    checkpoint = out / CHECKPOINT_NAME
    save_checkpoint(state, checkpoint)
    summary = {
        "checkpoint": str(checkpoint),
        "loss_log": str(out / LOSS_LOG_NAME),
        "steps": state.step,
        "rays": len(data.rays),
        "frames": data.n_frames,
        "training_psnr": training_psnr(state, data),
    }
    if dataset.ground_truth_poses is not None and not gt_poses:
        summary.update(pose_errors(state, data.poses, dataset.ground_truth_poses, model, dataset.camera))
    return summary


def cmd_train(run: RunConfig, project: ProjectConfig) -> Path:
    """
    在数据集上联合优化场景、纹理与位姿，写出检查点与逐步损失日志
    Jointly optimize scene, texture and poses on a dataset, writing a checkpoint and the per-step loss log

    Returns:
    - Path: 检查点路径。Checkpoint path.
    """
    config = run.train_config(project)
    dataset = CorneaDataset.load(run.dataset)
    summary = _train(dataset, config, run.out, run.gt_poses)
    _write_summary(run.out / "train.json", summary)
    _emit(summary)
    return Path(summary["checkpoint"])


def _render_views(state: TrainState, eval_cfg: EvalConfig, count: Optional[int] = None):
    intr = eval_cfg.intrinsics
    for pose in eval_cfg.cameras(count):
        yield pose, render_direct(state.scene, intr, pose, state.config.sampling)


def cmd_render(run: RunConfig, project: ProjectConfig) -> List[Path]:
    """
    从评估圆弧（或 --orbit 指定数量的相机）直接渲染学习到的场景，写出16位图像与8位累积不透明度预览
    Render the learned scene directly from the evaluation arc (or --orbit cameras), writing 16-bit images
    and 8-bit accumulation previews

    Returns:
    - List[Path]: 写出的文件。Written files.
    """
    state = load_checkpoint(run.checkpoint)
    written = []
    for i, (_, (image, acc)) in enumerate(_render_views(state, project.eval, run.orbit or None)):
        view = run.out / f"view_{i:03d}.png"
        preview = run.out / f"acc_{i:03d}.png"
        save_image_16(view, image)
        save_preview_8(preview, acc)
        written += [view, preview]
    if state.texture.enabled:
        texture = run.out / "texture.png"
        save_image_16(texture, state.texture.colors())
        written.append(texture)
    else:
        warnings.warn("checkpoint was trained without texture decomposition; no texture written")
    logging.info("rendered %d views to %s", len(written) // 2, run.out)
    _emit({"files": [str(p) for p in written]})
    return written


def evaluate_views(state: TrainState, scene, eval_cfg: EvalConfig) -> Dict[str, Any]:
    """
    新视角评估：与真值场景的直接渲染比较SSIM与PSNR
    Novel-view evaluation: SSIM and PSNR against direct renders of the ground-truth scene

    Args:
    - state (TrainState): 训练状态。Training state.
    - scene (SceneSpec): 真值场景。Ground-truth scene.
    - eval_cfg (EvalConfig): 评估相机。Evaluation cameras.

    Returns:
    - Dict[str, Any]: 各视角与平均指标。Per-view and mean metrics.
    """
    intr = eval_cfg.intrinsics
    ssims, psnrs = [], []
    for pose, (image, _) in _render_views(state, eval_cfg):
        reference = render_ground_truth_view(scene, intr, pose)
        ssims.append(ssim(image, reference))
        psnrs.append(psnr(image, reference))
    return {
        "ssim": float(np.mean(ssims)),
        "psnr": float(np.mean(psnrs)),
        "ssim_views": ssims,
        "psnr_views": psnrs,
    }


def cmd_eval(run: RunConfig, project: ProjectConfig) -> Dict[str, Any]:
    """
    以合成数据集的真值评估检查点并追加到报告
    Evaluate a checkpoint against a synthetic dataset's ground truth and append it to the report

    Returns:
    - Dict[str, Any]: 指标。Metrics.
    """
    truth = load_ground_truth(run.dataset)
    state = load_checkpoint(run.checkpoint)
    metrics = evaluate_views(state, truth.scene, project.eval)
    dataset = CorneaDataset.load(run.dataset)
    if len(dataset) == len(state.frame_ids):
        base = dataset.poses(truth.model, ground_truth=state.pose_source == "ground_truth")
        metrics.update(pose_errors(state, base, truth.poses, truth.model, dataset.camera))
    else:
        logging.warning(
            "checkpoint has %d frames, dataset has %d; skipping pose errors",
            len(state.frame_ids), len(dataset),
        )
    append_report(
        run.out / REPORT_NAME,
        "eval",
        {
            "train": state.config.to_dict(),
            "eval": dataclass_to_dict(project.eval),
            "dataset": str(run.dataset),
        },
        state.config.seed,
        metrics,
    )
    _emit(metrics)
    return metrics


def cmd_ablate(run: RunConfig, project: ProjectConfig) -> List[Dict[str, Any]]:
    """
    位姿优化消融：每个噪声水平生成数据集，分别训练开启与关闭位姿优化的两组并评估
    Pose-optimization ablation: for each noise level generate a dataset, train with and without pose
    optimization and evaluate both

    Returns:
    - List[Dict[str, Any]]: 每个单元（噪声水平 x 组）一行。One row per (noise level, arm) cell.
    """
    ablation = project.ablation
    synth = run.synth_config(project)
    base = run.train_config(project)
    if ablation.steps is not None and run.steps is None:
        base = replace(base, steps=ablation.steps)
    synth.scene.check_inside(base.bbox_lo, base.bbox_hi)
    rows = []
    levels = ablation.noise_levels if run.noise is None else (run.noise,)
    for sigma in levels:
        cell = run.out / f"sigma_{sigma:.3f}"
        data_dir = make_dataset(replace(synth, noise=float(sigma)), cell / "data")
        truth = load_ground_truth(data_dir)
        dataset = CorneaDataset.load(data_dir)
        for arm, no_pose_opt in (("pose_opt", False), ("no_pose_opt", True)):
            config = base.with_ablation(no_pose_opt=no_pose_opt)
            summary = _train(dataset, config, cell / arm, model=truth.model)
            state = load_checkpoint(summary["checkpoint"])
            metrics = evaluate_views(state, truth.scene, project.eval)
            metrics.update({k: v for k, v in summary.items() if k.endswith(("_px", "_mm"))})
            metrics["training_psnr"] = summary["training_psnr"]
            row = {"noise": float(sigma), "arm": arm, **metrics}
            append_report(
                run.out / REPORT_NAME,
                "ablate",
                {"train": config.to_dict(), "synth": synth.to_dict(), "noise": float(sigma)},
                config.seed,
                row,
            )
            logging.info(
                "noise %.3f %s: ssim %.4f psnr %.2f dB", sigma, arm, metrics["ssim"], metrics["psnr"]
            )
            rows.append(row)
    write_table(
        run.out / RESULTS_NAME,
        rows,
        RESULT_COLUMNS,
        title=f"steps {base.steps}, seed {base.seed}, eval views {project.eval.views}",
    )
    _emit(
        {
            "cells": [
                {k: r[k] for k in ("noise", "arm", "ssim", "psnr") if k in r} for r in rows
            ]
        }
    )
    return rows


def cmd_ingest(run: RunConfig, project: ProjectConfig) -> Path:
    """
    将真实采集清单转换为合成数据集的目录格式（缺失的椭圆由掩码拟合）
    Convert a real-capture manifest into the synthetic dataset layout (missing ellipses fitted from masks)

    Returns:
    - Path: 输出目录。Output directory.
    """
    dataset = CorneaDataset.load(run.dataset)
    out = dataset.write(run.out)
    _emit(
        {
            "dataset": str(out),
            "frames": len(dataset),
            "observations": [o.to_dict() for o in dataset.observations],
        }
    )
    return out


_COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "render": cmd_render,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "ingest": cmd_ingest,
}


def run(config: RunConfig):
    """
    校验路径、读取项目配置并执行子命令
    Validate paths, read the project config and run the subcommand
    """
    config.validate()
    project = config.project()
    return _COMMANDS[config.subcommand](config, project)
