import json
import time
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

from .config import config_hash
from .errors import OutputIOError

__all__ = ["append_report", "read_reports", "format_table", "write_table"]


def append_report(
    path: Union[str, Path],
    kind: str,
    config: Dict[str, Any],
    seed: int,
    metrics: Dict[str, Any],
) -> Dict[str, Any]:
    """
    以JSON Lines格式追加一条自描述的指标记录（含配置哈希与随机种子）
    Append one self-describing metrics record as JSON Lines (config hash and seed included)

    记录中的 "time" 为写入时的本地时间，因此报告文件本身不逐字节可复现；指标、配置哈希与种子可复现。
    The "time" field is the local wall-clock time of the write, so report files are not byte-reproducible;
    metrics, config hash and seed are.

    Args:
    - path (Union[str, Path]): 报告文件。Report file.
    - kind (str): 记录类型，如 "eval"、"ablate"。Record kind such as "eval" or "ablate".
    - config (Dict[str, Any]): 生成该记录的配置。Configuration that produced the record.
    - seed (int): 随机种子。Random seed.
    - metrics (Dict[str, Any]): 指标。Metrics.

    Returns:
    - Dict[str, Any]: 写入的记录。The written record.
    """
    path = Path(path)
    record = {
        "kind": kind,
        "config_hash": config_hash(config),
        "seed": seed,
        "config": config,
        "metrics": metrics,
        "time": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a", encoding="utf-8") as f:
            f.write(json.dumps(record, sort_keys=True) + "\n")
    except OSError as e:
        raise OutputIOError(f"cannot append report {path}: {e}") from e
    return record


def read_reports(path: Union[str, Path]) -> List[Dict[str, Any]]:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def format_table(rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> str:
    """
    将指标行格式化为 Markdown 表格，缺失的列留空
    Format metric rows as a Markdown table, missing columns left blank

    Args:
    - rows (Sequence[Dict[str, Any]]): 指标行。Metric rows.
    - columns (Sequence[str]): 列名。Column names.

    Returns:
    - str: 表格文本。Table text.
    """
    lines = [
        "| " + " | ".join(columns) + " |",
        "|" + "---|" * len(columns),
    ]
    for row in rows:
        lines.append("| " + " | ".join(_cell(row.get(c)) for c in columns) + " |")
    return "\n".join(lines) + "\n"


def write_table(path: Union[str, Path], rows: Sequence[Dict[str, Any]], columns: Sequence[str], title: str = ""):
    path = Path(path)
    text = format_table(rows, columns)
    if title:
        text = f"{title}\n\n{text}"
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise OutputIOError(f"cannot write table {path}: {e}") from e
