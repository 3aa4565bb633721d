# simulator/series.py
"""Sampled observable columns over a common time grid."""

from dataclasses import dataclass, field
from typing import Any

import numpy as np
import pandas as pd

from .errors import InvalidArgumentError


@dataclass
class TimeSeries:
    t: np.ndarray
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        for name, values in list(self.columns.items()):
            values = np.asarray(values, dtype=float)
            if values.shape != self.t.shape:
                raise InvalidArgumentError(f"column {name!r} has {values.shape[0] if values.ndim else 0} samples, time grid has {self.t.shape[0]}")
            self.columns[name] = values

    def __len__(self) -> int:
        return self.t.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise InvalidArgumentError(f"no column {name!r}; have {sorted(self.columns)}") from None

    def final(self, name: str) -> float:
        return float(self.column(name)[-1])

    def to_frame(self) -> pd.DataFrame:
        """Time first, then columns in insertion order."""
        frame = pd.DataFrame({"t": self.t})
        for name, values in self.columns.items():
            frame[name] = values
        return frame
