# cli/chart_utils.py
"""Static SVG line charts of time series and sweep tables."""

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402
from loguru import logger  # noqa: E402

from simulator.series import TimeSeries  # noqa: E402

plt.rcParams["svg.hashsalt"] = "singletsim"

SERIES_COLUMNS = ("fidelity", "dark_overlap", "trace", "photon_mean")


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"Wrote chart {path}")
    return path


def create_series_chart(series: TimeSeries, path: Path, title: str, columns: Optional[Sequence[str]] = None) -> Path:
    """Line chart of the selected columns against t."""
    columns = [c for c in (columns or SERIES_COLUMNS) if c in series.columns]
    fig, ax = plt.subplots(figsize=(7, 4))
    for column in columns:
        ax.plot(series.t, series.column(column), label=column)
    ax.set_xlabel("t [1/Omega0]")
    ax.set_ylabel("value")
    ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    return _save(fig, path)


def create_table_chart(table: pd.DataFrame, x: str, path: Path, title: str, y: str = "f_final") -> Path:
    """Final fidelity against the swept parameter, with error bars when a standard-error column is present."""
    fig, ax = plt.subplots(figsize=(6, 4))
    error_column = f"{y}_se"
    if error_column in table.columns and table[error_column].fillna(0).abs().sum() > 0:
        ax.errorbar(table[x], table[y], yerr=table[error_column], marker="o", capsize=3, label=y)
    else:
        ax.plot(table[x], table[y], marker="o", label=y)
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    return _save(fig, path)
