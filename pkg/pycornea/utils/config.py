import dataclasses
import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Type, TypeVar, Union

from .errors import ConfigError

__all__ = ["load_json", "dataclass_from_dict", "dataclass_to_dict", "config_hash"]

T = TypeVar("T")


def load_json(path: Union[str, Path]) -> Dict[str, Any]:
    """
    读取JSON配置文件
    Read a JSON configuration file

    Args:
    - path (Union[str, Path]): 文件路径。File path.

    Returns:
    - Dict[str, Any]: 顶层对象。The top-level object.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a JSON object at the top level")
    return data


def dataclass_from_dict(cls: Type[T], d: Dict[str, Any], section: str = "") -> T:
    """
    由字典构造数据类，未知键报错，列表转为元组
    Build a dataclass from a dict, rejecting unknown keys and turning lists into tuples

    Args:
    - cls (Type[T]): 数据类类型。Dataclass type.
    - d (Dict[str, Any]): 输入字典，缺失的键取默认值。Input dict, missing keys take defaults.
    - section (str): 出错时报告的配置节名。Section name used in error messages.
    """
    if d is None:
        d = {}
    if not isinstance(d, dict):
        raise ConfigError(f"config section '{section or cls.__name__}' must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(d) - names)
    if unknown:
        raise ConfigError(f"unknown keys in '{section or cls.__name__}': {', '.join(unknown)}")
    kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid '{section or cls.__name__}' config: {e}") from e


def dataclass_to_dict(obj) -> Dict[str, Any]:
    d = dataclasses.asdict(obj)
    return json.loads(json.dumps(d))


def config_hash(config: Dict[str, Any]) -> str:
    """
    配置的稳定哈希（规范化JSON的sha256）
    Stable hash of a configuration (sha256 of the canonical JSON)
    """
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
