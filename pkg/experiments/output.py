"""
Result emission: CSV through pandas with 17 significant digits, JSON with
sorted keys.  Both are byte-stable for identical inputs.
"""

import json
import logging
import math
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
FORMATS = ("csv", "json")


def clean(value: Any) -> Any:
    """
    JSON-safe copy: numpy scalars and arrays become Python values, NaN
    becomes None and infinities become the strings "inf"/"-inf"
    """
    if isinstance(value, dict):
        return {str(k): clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [clean(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return {"re": clean(value.real.tolist()), "im": clean(value.imag.tolist())}
        return clean(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, complex):
        return {"re": clean(value.real), "im": clean(value.imag)}
    return value


def to_json(data: Any) -> str:
    return json.dumps(clean(data), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def to_csv(rows: Sequence[Dict[str, Any]], columns: Optional[List[str]] = None) -> str:
    """RFC-4180 CSV with a header row, columns in the given or first-row order"""
    frame = pd.DataFrame([clean(row) for row in rows], columns=columns)
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\r\n")


def write_text(text: str, path: Optional[str]) -> str:
    """Write to path, or print when path is None; returns the text"""
    if path is None:
        print(text, end="")
    else:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        logger.info(f"Wrote {path}")
    return text


def emit(data: Any, fmt: str, path: Optional[str] = None,
         columns: Optional[List[str]] = None) -> str:
    """
    Emit a result in the requested format

    Args:
        data: A list of flat row dicts (csv or json) or any JSON-able object (json)
        fmt: "csv" or "json"
        path: Output file, stdout when None
        columns: Column order for csv

    Returns:
        str: The emitted text
    """
    if fmt not in FORMATS:
        raise ValueError(f"Unknown output format '{fmt}', expected one of {FORMATS}")
    if fmt == "csv":
        if not isinstance(data, list):
            raise ValueError("CSV output needs a list of rows")
        return write_text(to_csv(data, columns), path)
    return write_text(to_json(data), path)


def sidecar_path(path: Optional[str], suffix: str) -> Optional[str]:
    """results.csv -> results.<suffix>.json"""
    if path is None:
        return None
    stem = path[:-4] if path.endswith(".csv") else path
    return f"{stem}.{suffix}.json"
