"""
命令行模块：合成数据、训练、新视角渲染、评估、位姿优化消融与采集数据导入
Command-line module: synthetic data, training, novel-view rendering, evaluation, pose-optimization ablation and capture ingestion
"""

from .config import (
    SECTIONS,
    SUBCOMMANDS,
    AblationConfig,
    EvalConfig,
    ProjectConfig,
    RunConfig,
    load_project_config,
)
from .commands import (
    CHECKPOINT_NAME,
    LOSS_LOG_NAME,
    REPORT_NAME,
    RESULT_COLUMNS,
    RESULTS_NAME,
    cmd_ablate,
    cmd_eval,
    cmd_ingest,
    cmd_render,
    cmd_synth,
    cmd_train,
    evaluate_views,
    run,
)
from .main import EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK, build_parser, main

__all__ = [
    "SECTIONS",
    "SUBCOMMANDS",
    "AblationConfig",
    "EvalConfig",
    "ProjectConfig",
    "RunConfig",
    "load_project_config",
    "CHECKPOINT_NAME",
    "LOSS_LOG_NAME",
    "REPORT_NAME",
    "RESULT_COLUMNS",
    "RESULTS_NAME",
    "cmd_ablate",
    "cmd_eval",
    "cmd_ingest",
    "cmd_render",
    "cmd_synth",
    "cmd_train",
    "evaluate_views",
    "run",
    "EXIT_CONFIG",
    "EXIT_IO",
    "EXIT_NUMERIC",
    "EXIT_OK",
    "build_parser",
    "main",
]
