# cli/outputs.py
"""CSV and metadata emission. CSV floats carry 17 significant digits."""

import json
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from loguru import logger

from simulator.series import TimeSeries

FLOAT_FORMAT = "%.17g"


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (Path, set)):
        return str(value) if isinstance(value, Path) else sorted(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def write_table(table: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"Wrote {len(table)} rows to {path}")
    return path


def write_series(series: TimeSeries, path: Path) -> Path:
    return write_table(series.to_frame(), path)


def write_meta(payload: dict[str, Any], path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, default=_json_default)
        handle.write("\n")
    logger.info(f"Wrote metadata to {path}")
    return path
