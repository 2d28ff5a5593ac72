"""
CSV artifact tools: lossless writing and reading of result tables with a
`# meta` header.
"""

import io
from typing import Any, Dict, Optional, Tuple
import pandas as pd
from utils.config import logger
from utils.helpers import format_float

META_PREFIX = "# meta "


def _flatten(meta: Dict[str, Any], prefix: str = "") -> Dict[str, str]:
    flat = {}
    for key, value in meta.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, f"{name}."))
        elif isinstance(value, float):
            flat[name] = format_float(value)
        elif value is None:
            flat[name] = ""
        else:
            flat[name] = str(getattr(value, "value", value))
    return flat


def render_csv(frame: pd.DataFrame, meta: Optional[Dict[str, Any]] = None) -> str:
    """
    Render a table as CSV text.

    Meta entries become sorted `# meta key = value` lines ahead of the single
    header row; floats use 17 significant digits and lines end with LF.

    Args:
        frame: Table to render
        meta: Annotations (nested dicts are flattened with dotted keys)

    Returns:
        CSV text
    """
    lines = [
        f"{META_PREFIX}{key} = {value}\n"
        for key, value in sorted(_flatten(meta or {}).items())
    ]
    body = frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")
    return "".join(lines) + body


def write_csv(
    frame: pd.DataFrame, file_path: str, meta: Optional[Dict[str, Any]] = None
) -> str:
    """
    Write a table to a UTF-8 CSV file.

    Args:
        frame: Table to write
        file_path: Destination path
        meta: Annotations for the header

    Returns:
        The text that was written
    """
    text = render_csv(frame, meta)
    try:
        with open(file_path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    except OSError as e:
        logger.error(f"Error writing {file_path}: {e}")
        raise
    logger.info(f"Wrote {len(frame)} rows to {file_path}")
    return text


def parse_csv(text: str) -> Tuple[pd.DataFrame, Dict[str, str]]:
    """
    Parse CSV text produced by render_csv.

    Returns:
        Tuple (table, meta) where meta maps keys to their raw string values
    """
    meta = {}
    for line in text.splitlines():
        if line.startswith(META_PREFIX):
            key, _, value = line[len(META_PREFIX):].partition(" = ")
            meta[key] = value
    frame = pd.read_csv(
        io.StringIO(text),
        comment="#",
        float_precision="round_trip",
        keep_default_na=False,
    )
    return frame, meta


def read_csv(file_path: str) -> Tuple[pd.DataFrame, Dict[str, str]]:
    """
    Load a CSV artifact.

    Args:
        file_path: Path to the file

    Returns:
        Tuple (table, meta)
    """
    try:
        with open(file_path, encoding="utf-8") as handle:
            return parse_csv(handle.read())
    except Exception as e:
        logger.error(f"Error loading data from {file_path}: {e}")
        raise
