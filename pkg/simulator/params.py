# simulator/params.py
"""
Validated configuration models for the adiabatic singlet protocol.

Rates (g, Delta, kappa) are in units of the Rabi amplitude Omega0 and times
in units of 1/Omega0. Both models are frozen and reject unknown keys.
"""

import math
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

IntegratorMethod = Literal["rk4", "adaptive", "magnus4"]
ModelChoice = Literal["reduced", "effective", "full"]
DissipativeSolver = Literal["auto", "lindblad", "mcwf"]


def _split_csv(value: Any) -> Any:
    if isinstance(value, str):
        return tuple(part.strip() for part in value.split(",") if part.strip())
    return value


class IntegratorConfig(BaseModel):
    """Time grid and method for one propagation."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    method: IntegratorMethod = "rk4"
    dt: float = Field(0.02, gt=0)
    t_span: tuple[float, float] = (-2000.0, 2000.0)
    sample_every: int = Field(1, ge=1)
    rtol: float = Field(1e-10, gt=0)
    atol: float = Field(1e-12, gt=0)
    convergence_tol: float = Field(1e-6, gt=0)
    check_convergence: bool = False
    renormalize: bool = False
    n_workers: int = Field(1, ge=1)
    trajectory_chunk: int = Field(500, ge=1)

    @model_validator(mode="after")
    def _ordered_span(self) -> "IntegratorConfig":
        t_start, t_end = self.t_span
        if not (math.isfinite(t_start) and math.isfinite(t_end)) or t_end < t_start:
            raise ValueError(f"t_span must be finite with t_start <= t_end, got {self.t_span}")
        return self

    @property
    def n_steps(self) -> int:
        t_start, t_end = self.t_span
        if t_end == t_start:
            return 0
        return max(1, math.ceil((t_end - t_start) / self.dt - 1e-9))

    @property
    def step(self) -> float:
        """Actual step, shrunk so the grid lands exactly on t_end."""
        n_steps = self.n_steps
        if n_steps == 0:
            return 0.0
        return (self.t_span[1] - self.t_span[0]) / n_steps

    def sample_steps(self) -> np.ndarray:
        """Step indices at which observers are evaluated; always includes both ends."""
        n_steps = self.n_steps
        steps = np.arange(0, n_steps + 1, self.sample_every)
        if steps[-1] != n_steps:
            steps = np.append(steps, n_steps)
        return steps

    def sample_times(self) -> np.ndarray:
        return self.t_span[0] + self.sample_steps() * self.step

    def halved(self) -> "IntegratorConfig":
        return self.model_copy(update={"dt": self.dt / 2, "sample_every": self.sample_every * 2})


class ProtocolParams(BaseModel):
    """Physical and numerical parameters of one protocol run."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    n_parties: int = Field(3, ge=2)
    omega0: float = Field(1.0, gt=0)
    pulse_width: float = Field(800.0, gt=0)
    pulse_delay: Optional[float] = Field(None, ge=0)
    g: float = Field(1.0, ge=0)
    delta: float = Field(10.0, gt=0)
    kappa: float = Field(0.0, ge=0)
    chi: Optional[tuple[float, ...]] = None
    compensated: bool = True
    model: ModelChoice = "reduced"
    photon_cutoff: Optional[int] = Field(None, ge=0)
    t_final: Optional[float] = Field(None, ge=0)
    enabled_pulses: tuple[bool, bool] = (True, True)

    method: IntegratorMethod = "rk4"
    dt: float = Field(0.02, gt=0)
    n_samples: int = Field(1001, ge=1)
    check_convergence: bool = False
    dissipative_solver: DissipativeSolver = "auto"
    n_traj: int = Field(2000, ge=1)
    trajectory_chunk: int = Field(500, ge=1)
    seed: int = Field(1234, ge=0)
    max_workers: int = Field(1, ge=1)

    @field_validator("chi", "enabled_pulses", mode="before")
    @classmethod
    def _split_tuples(cls, value: Any) -> Any:
        return _split_csv(value)

    @model_validator(mode="after")
    def _consistent(self) -> "ProtocolParams":
        if self.chi is not None:
            if len(self.chi) != self.n_parties - 1:
                raise ValueError(f"chi needs {self.n_parties - 1} entries, got {len(self.chi)}")
            if not math.isclose(self.chi[0], 1.0, rel_tol=0, abs_tol=1e-12):
                raise ValueError("chi[0] must equal 1")
        if self.photon_cutoff is not None and self.photon_cutoff < self.n_parties - 1:
            raise ValueError(f"photon_cutoff {self.photon_cutoff} cannot hold the {self.n_parties - 1} photons reachable from the initial state")
        return self

    @property
    def tau(self) -> float:
        return self.pulse_width / 2 if self.pulse_delay is None else self.pulse_delay

    @property
    def duration(self) -> float:
        return 5 * self.pulse_width if self.t_final is None else self.t_final

    @property
    def t_span(self) -> tuple[float, float]:
        return (-self.duration / 2, self.duration / 2)

    @property
    def cutoff(self) -> int:
        return self.n_parties - 1 if self.photon_cutoff is None else self.photon_cutoff

    @property
    def chi_values(self) -> np.ndarray:
        if self.chi is None:
            return np.ones(self.n_parties - 1)
        return np.asarray(self.chi, dtype=float)

    def integrator_config(self, **overrides: Any) -> IntegratorConfig:
        """Integrator settings whose sample grid has about ``n_samples`` points."""
        settings: dict[str, Any] = {
            "method": self.method,
            "dt": self.dt,
            "t_span": self.t_span,
            "check_convergence": self.check_convergence,
            "n_workers": self.max_workers,
            "trajectory_chunk": self.trajectory_chunk,
        }
        settings.update(overrides)
        draft = IntegratorConfig(**settings)
        if "sample_every" not in overrides and self.n_samples > 1:
            settings["sample_every"] = max(1, draft.n_steps // (self.n_samples - 1))
        return IntegratorConfig(**settings)

    def with_updates(self, **updates: Any) -> "ProtocolParams":
        """Validated copy with some fields replaced."""
        return ProtocolParams.model_validate({**self.model_dump(), **updates})
