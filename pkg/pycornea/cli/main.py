import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from ..utils.errors import ConfigError, TrainingError
from .commands import run
from .config import RunConfig

__all__ = ["EXIT_OK", "EXIT_CONFIG", "EXIT_IO", "EXIT_NUMERIC", "build_parser", "main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, default=None, help="Project config JSON file.")
    p.add_argument("--out", type=Path, required=True, help="Output directory.")
    p.add_argument("--seed", type=int, default=None, help="Random seed override.")
    p.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level.")


def _ablation_flags(p: argparse.ArgumentParser):
    p.add_argument("--steps", type=int, default=None, help="Training steps override.")
    p.add_argument("--no-texture", action="store_true", help="Freeze the iris texture at black.")
    p.add_argument("--no-pose-opt", action="store_true", help="Keep the initial cornea poses.")
    p.add_argument("--no-radial", action="store_true", help="Drop the radial regularizer.")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pycornea",
        description="Reconstruct a scene from its reflections in the cornea.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("synth", help="Generate a synthetic dataset with ground truth.")
    _common(p)
    p.add_argument("--noise", type=float, default=None, help="Radius noise level sigma.")

    p = sub.add_parser("train", help="Train scene, texture and poses on a dataset.")
    _common(p)
    p.add_argument("--dataset", type=Path, required=True, help="Dataset directory or manifest.")
    p.add_argument("--gt-poses", action="store_true", help="Build rays from ground-truth poses.")
    _ablation_flags(p)

    p = sub.add_parser("render", help="Render the learned scene from novel cameras.")
    _common(p)
    p.add_argument("--checkpoint", type=Path, required=True, help="Checkpoint file.")
    p.add_argument("--orbit", type=int, default=0, help="Number of cameras on the arc.")

    p = sub.add_parser("eval", help="Evaluate a checkpoint against synthetic ground truth.")
    _common(p)
    p.add_argument("--dataset", type=Path, required=True, help="Synthetic dataset directory.")
    p.add_argument("--checkpoint", type=Path, required=True, help="Checkpoint file.")

    p = sub.add_parser("ablate", help="Pose-optimization ablation over radius noise levels.")
    _common(p)
    p.add_argument("--noise", type=float, default=None, help="Run a single noise level.")
    _ablation_flags(p)

    p = sub.add_parser("ingest", help="Convert a capture manifest into the dataset layout.")
    _common(p)
    p.add_argument("--dataset", type=Path, required=True, help="Manifest file or directory.")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    命令行入口，返回退出码：0 成功，2 配置错误，3 读写错误，4 数值错误
    Command-line entry point returning the exit code: 0 success, 2 config error, 3 IO error,
    4 numerical error
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        run(RunConfig.from_args(args))
    except (TrainingError, ArithmeticError) as e:
        logging.error("numerical failure: %s", e)
        if isinstance(e, TrainingError) and e.diagnostics:
            logging.error("diagnostics: %s", e.diagnostics)
        return EXIT_NUMERIC
    except (ConfigError, ValueError) as e:
        logging.error("configuration error: %s", e)
        return EXIT_CONFIG
    except OSError as e:
        logging.error("io error: %s", e)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
