__all__ = [
    "CorneaError",
    "GeometryError",
    "OutOfSectionError",
    "GrazingError",
    "OutsideCorneaError",
    "SurfacePreconditionError",
    "FieldDomainError",
    "BackwardStateError",
    "TrainingError",
    "EllipseFitError",
    "ImageIOError",
    "OutputIOError",
    "CheckpointError",
    "ConfigError",
    "MissingGroundTruthError",
]


class CorneaError(Exception):
    """
    pycornea所有领域异常的基类
    Base class of every pycornea domain error
    """


class GeometryError(CorneaError, ValueError):
    """
    角膜几何计算失败
    Cornea geometry could not be evaluated
    """


class OutOfSectionError(GeometryError):
    """
    查询半径超出角膜截面（r > r_L）
    Queried radius lies outside the cornea section (r > r_L)
    """


class GrazingError(GeometryError):
    """
    入射光线与法线不相向（掠射或背面）
    Incoming direction does not face the surface (grazing or back face)
    """


class OutsideCorneaError(GeometryError):
    """
    像素投影到眼盘坐标后超出单位圆
    Pixel projects outside the unit eye disk
    """


class SurfacePreconditionError(GeometryError):
    """
    点不在椭球面上
    Point is not on the ellipsoid surface
    """


class FieldDomainError(CorneaError, ValueError):
    """
    纹理场查询超出单位圆
    Texture field queried outside the unit disk
    """


class BackwardStateError(CorneaError, RuntimeError):
    """
    在没有前向记录的情况下调用反向传播
    Backward pass requested without a recorded forward pass
    """


class TrainingError(CorneaError, ArithmeticError):
    """
    训练过程中出现非有限损失
    Non-finite loss during training
    """

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


class EllipseFitError(CorneaError, ValueError):
    """
    椭圆拟合失败（点数不足或退化）
    Ellipse fit failed (too few points or degenerate configuration)
    """


class ImageIOError(CorneaError, OSError):
    """
    图像读写失败
    Image could not be read or written
    """


class OutputIOError(CorneaError, OSError):
    """
    报告、摘要等输出文件写入失败
    Output file such as a report or a run summary could not be written
    """


class CheckpointError(CorneaError, OSError):
    """
    检查点文件损坏或版本不兼容
    Checkpoint file is corrupt or has an incompatible version
    """


class ConfigError(CorneaError, ValueError):
    """
    配置文件或命令行参数无效
    Invalid configuration file or command-line arguments
    """


class MissingGroundTruthError(CorneaError, FileNotFoundError):
    """
    数据集没有真值（真实采集数据无法与参考比较）
    Dataset carries no ground truth (real captures have no reference to compare against)
    """
