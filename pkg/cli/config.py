# cli/config.py
"""
Run configuration for the command line.

Config files are KEY=value files (``#`` comments) read with python-dotenv, or
a ``*_meta.json`` file emitted by an earlier run. Keys are RunConfig fields or
ProtocolParams fields; any other key is rejected by name.

Example::

    scenario=fig5
    n=3
    out=results
    formats=csv,json,svg
    kappa=0.05
    chi=1,1,1
"""

import json
from pathlib import Path
from typing import Any, Literal, Optional

from dotenv import dotenv_values
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from simulator.errors import ConfigError
from simulator.params import ProtocolParams

OutputFormat = Literal["csv", "json", "svg"]
Verbosity = Literal["TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR"]

RUN_KEYS = ("scenario", "n", "out", "formats", "seed", "strict", "verbosity", "axis", "values")
PARAM_KEYS = tuple(ProtocolParams.model_fields)


def _split(value: Any) -> Any:
    if isinstance(value, str):
        return tuple(part.strip() for part in value.split(",") if part.strip())
    return value


class RunConfig(BaseModel):
    """What to run, where to write it, and the parameter overrides."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    scenario: str = "fig3"
    n: Optional[int] = Field(None, ge=2)
    out: Path = Path("results")
    formats: tuple[OutputFormat, ...] = ("csv", "json")
    seed: Optional[int] = Field(None, ge=0)
    strict: bool = False
    verbosity: Verbosity = "INFO"
    axis: Optional[str] = None
    values: tuple[float, ...] = ()
    params: dict[str, Any] = Field(default_factory=dict)

    @field_validator("formats", "values", mode="before")
    @classmethod
    def _split_lists(cls, value: Any) -> Any:
        return _split(value)

    @field_validator("verbosity", mode="before")
    @classmethod
    def _upper(cls, value: Any) -> Any:
        return value.upper() if isinstance(value, str) else value

    @field_validator("params")
    @classmethod
    def _known_params(cls, params: dict[str, Any]) -> dict[str, Any]:
        unknown = sorted(set(params) - set(PARAM_KEYS))
        if unknown:
            raise ValueError(f"unknown parameter key(s): {', '.join(unknown)}")
        return params

    @model_validator(mode="after")
    def _party_count(self) -> "RunConfig":
        if "n_parties" in self.params:
            raise ValueError("set the party count with 'n', not 'n_parties'")
        return self

    def overrides(self) -> dict[str, Any]:
        """ProtocolParams overrides, with the seed folded in."""
        overrides = dict(self.params)
        if self.seed is not None:
            overrides["seed"] = self.seed
        return overrides

    def effective_seed(self) -> int:
        return int(self.overrides().get("seed", ProtocolParams.model_fields["seed"].default))

    def with_updates(self, **updates: Any) -> "RunConfig":
        """Validated copy; ``None`` values leave the field untouched, ``params`` entries are merged."""
        data = self.model_dump()
        params = {**data.pop("params"), **updates.pop("params", {})}
        data.update({key: value for key, value in updates.items() if value is not None})
        return build_run_config({**data, "params": params})


def build_run_config(data: dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_describe(exc)) from exc


def _describe(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        where = ".".join(str(part) for part in error["loc"]) or "config"
        parts.append(f"{where}: {error['msg']}")
    return "; ".join(parts)


def parse_key_values(raw: dict[str, Optional[str]], source: str = "config") -> RunConfig:
    """Split flat key/value pairs into RunConfig fields and parameter overrides."""
    run: dict[str, Any] = {}
    params: dict[str, Any] = {}
    for key, value in raw.items():
        if value is None or value == "":
            continue
        if key in RUN_KEYS:
            run[key] = value
        elif key in PARAM_KEYS and key != "n_parties":
            params[key] = value
        elif key == "n_parties":
            run["n"] = value
        else:
            logger.error(f"Unknown key {key!r} in {source}")
            raise ConfigError(f"unknown config key {key!r} in {source}")
    return build_run_config({**run, "params": params})


def load_config(path: Optional[Path]) -> RunConfig:
    """
    Read a run configuration.

    Args:
        path: KEY=value file, emitted ``*_meta.json`` file, or None for defaults.

    Raises:
        ConfigError: missing file, malformed content or unknown keys.
    """
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    if path.suffix == ".json":
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
        if not isinstance(payload, dict) or "run_config" not in payload:
            raise ConfigError(f"{path} carries no run_config section")
        logger.info(f"Loaded run configuration from metadata {path}")
        return build_run_config(payload["run_config"])
    config = parse_key_values(dotenv_values(path), source=str(path))
    logger.info(f"Loaded run configuration from {path}")
    return config
