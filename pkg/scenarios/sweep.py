# scenarios/sweep.py
"""
One-dimensional parameter sweeps over ProtocolParams.

Points are independent runs; a failing point is recorded with its error and
the sweep continues. Row order always follows ``values``.
"""

import math
import time
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Any, Optional

import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, field_validator
from tqdm import tqdm

from logs.config import LogConfig, setup_logger
from simulator.errors import SingletSimError
from simulator.params import ProtocolParams
from simulator.protocol import Solver, run_protocol

setup_logger(logger, LogConfig.get_sweep_log(), LogConfig.SCENARIO_FORMAT)

REAL_AXES = ("omega0", "pulse_width", "pulse_delay", "g", "delta", "kappa", "t_final", "dt")
RESULT_COLUMNS = ("f_final", "f_final_se", "runtime", "status", "error")


class SweepSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    base: ProtocolParams
    axis: str
    values: tuple[float, ...] = ()
    solver: Optional[Solver] = None

    @field_validator("axis")
    @classmethod
    def _real_axis(cls, axis: str) -> str:
        if axis not in REAL_AXES:
            raise ValueError(f"axis {axis!r} is not a real-valued parameter; choose one of {', '.join(REAL_AXES)}")
        return axis

    @field_validator("values")
    @classmethod
    def _finite(cls, values: tuple[float, ...]) -> tuple[float, ...]:
        bad = [v for v in values if not math.isfinite(v)]
        if bad:
            raise ValueError(f"sweep values must be finite, got {bad}")
        return values

    @property
    def columns(self) -> list[str]:
        return [self.axis, *RESULT_COLUMNS]


def _evaluate_point(base: dict[str, Any], axis: str, solver: Optional[Solver], value: float) -> dict[str, Any]:
    started = time.perf_counter()
    row: dict[str, Any] = {axis: value}
    try:
        params = ProtocolParams.model_validate({**base, axis: value})
        run = run_protocol(params, solver)
        row.update(f_final=run.final_fidelity, f_final_se=run.final_fidelity_se, status="ok", error="")
    except (SingletSimError, ValueError) as exc:
        logger.error(f"Sweep point {axis}={value:g} failed: {exc}")
        row.update(f_final=float("nan"), f_final_se=float("nan"), status="failed", error=str(exc).splitlines()[0] if str(exc) else type(exc).__name__)
    row["runtime"] = time.perf_counter() - started
    return row


def run_sweep(spec: SweepSpec, max_workers: Optional[int] = None) -> pd.DataFrame:
    """
    Evaluate the final fidelity at every value of ``spec.axis``.

    Args:
        spec: Base parameters, axis and values.
        max_workers: Process count; defaults to ``spec.base.max_workers``.

    Returns:
        DataFrame with columns [axis, f_final, f_final_se, runtime, status, error].
    """
    workers = max_workers or spec.base.max_workers
    if not spec.values:
        logger.warning(f"Empty sweep over {spec.axis}; nothing to run")
        return pd.DataFrame(columns=spec.columns)

    task = partial(_evaluate_point, spec.base.model_dump(), spec.axis, spec.solver)
    logger.info(f"Sweeping {spec.axis} over {len(spec.values)} values with {workers} worker(s)")
    progress = {"total": len(spec.values), "desc": f"sweep {spec.axis}", "disable": None}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            rows = list(tqdm(executor.map(task, spec.values), **progress))
    else:
        rows = [task(value) for value in tqdm(spec.values, **progress)]

    table = pd.DataFrame(rows, columns=spec.columns)
    failed = int((table["status"] == "failed").sum())
    if failed:
        logger.warning(f"Sweep over {spec.axis}: {failed} of {len(table)} points failed")
    else:
        logger.success(f"✅ Sweep over {spec.axis} finished ({len(table)} points)")
    return table
