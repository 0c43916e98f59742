r"""
# pycornea

从角膜反射重建场景的辐射场 Python 库与命令行工具
Reconstruct the radiance field of a scene seen only as reflections in a person's cornea

## 安装 Installation

```shell
pip install .
```

开发与测试 Development and tests:

```shell
pip install ".[test]"
pytest            # 快速测试 fast suite
pytest -m slow    # 完整流程的实验性验收 full-pipeline acceptance runs
```

## 主要子库 Sub-packages

- pycornea.geometry: 角膜椭球几何、反射与初始位姿。Cornea ellipsoid geometry, reflection and initial placement.
- pycornea.fields: 场景体素辐射场、虹膜纹理场与体渲染。Voxel scene radiance field, iris texture field and volume rendering.
- pycornea.training: 纹理合成、损失、位姿修正与训练循环。Texture composition, losses, pose refinement and the training loop.
- pycornea.synth: 带真值的合成数据生成。Synthetic data generation with ground truth.
- pycornea.ingest: 16位图像、掩码、椭圆拟合与数据集读取。16-bit images, masks, ellipse fitting and dataset loading.
- pycornea.cli: 命令行入口。Command-line entry points.
- pycornea.utils: 异常、配置、指标与报告。Errors, configuration, metrics and reports.

"""

from . import geometry, fields, training, synth, ingest, utils, cli

__all__ = [
    "geometry",
    "fields",
    "training",
    "synth",
    "ingest",
    "utils",
    "cli",
]
