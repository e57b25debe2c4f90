"""Top-level configuration loader and validated run settings."""

from __future__ import annotations

import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from sbstcompact.errors import ConfigError

DEFAULT_CONFIG_PATH = Path("config/default.yaml")
OUT_DIR_ENV = "SBSTCOMPACT_OUT_DIR"
REPORT_FORMATS = ("json", "csv", "txt")


@lru_cache(maxsize=1)
def load_app_config(path: str | Path | None = None) -> Dict[str, Any]:
    """Load application configuration."""
    config_path = Path(path) if path else DEFAULT_CONFIG_PATH
    if not config_path.exists():
        return {}
    with config_path.open("r", encoding="utf-8") as handle:
        data = yaml.safe_load(handle) or {}
    return data


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="ignore")

    netlist: Optional[Path] = None
    programs: List[Path] = Field(default_factory=list)
    word_width: int = 8
    max_cycles: int = 1_000_000
    fault_mode: str = "bus"
    workers: int = 1
    out_dir: Optional[Path] = None
    report_formats: List[str] = Field(default_factory=lambda: ["json", "txt"])

    @field_validator("netlist", mode="after")
    @classmethod
    def _netlist_exists(cls, value: Optional[Path]) -> Optional[Path]:
        if value is not None and not value.exists():
            raise ValueError(f"netlist {value} does not exist")
        return value

    @field_validator("programs", mode="after")
    @classmethod
    def _programs_exist(cls, value: List[Path]) -> List[Path]:
        missing = [str(path) for path in value if not path.exists()]
        if missing:
            raise ValueError(f"program(s) not found: {', '.join(missing)}")
        return value

    @field_validator("word_width", mode="before")
    @classmethod
    def _width(cls, value: Any) -> int:
        width = int(value)
        if not 1 <= width <= 16:
            raise ValueError("word_width must be between 1 and 16")
        return width

    @field_validator("max_cycles", "workers", mode="before")
    @classmethod
    def _positive(cls, value: Any) -> int:
        number = int(value)
        if number < 1:
            raise ValueError("must be >= 1")
        return number

    @field_validator("fault_mode", mode="before")
    @classmethod
    def _mode(cls, value: Any) -> str:
        mode = str(value).strip().lower()
        if mode not in ("bus", "unit-output"):
            raise ValueError("fault_mode must be 'bus' or 'unit-output'")
        return mode

    @field_validator("report_formats", mode="before")
    @classmethod
    def _formats(cls, value: Any) -> List[str]:
        if value is None:
            return ["json", "txt"]
        if isinstance(value, str):
            tokens = [token.strip().lower() for token in value.split(",") if token.strip()]
        else:
            tokens = [str(item).strip().lower() for item in value if str(item).strip()]
        unknown = sorted(set(tokens) - set(REPORT_FORMATS))
        if unknown:
            raise ValueError(f"unknown report format(s): {', '.join(unknown)}")
        deduped: List[str] = []
        for token in tokens:
            if token not in deduped:
                deduped.append(token)
        return deduped

    @classmethod
    def from_sources(
        cls,
        config: Optional[Mapping[str, Any]] = None,
        overrides: Optional[Mapping[str, Any]] = None,
    ) -> "RunConfig":
        """Merge the ``run`` section of an app config with non-None overrides."""
        raw: Dict[str, Any] = {}
        if config:
            section = config.get("run", {})
            if isinstance(section, Mapping):
                raw.update(section)
        for key, value in (overrides or {}).items():
            if value is not None:
                raw[key] = value
        if raw.get("out_dir") is None and os.environ.get(OUT_DIR_ENV):
            raw["out_dir"] = os.environ[OUT_DIR_ENV]
        try:
            return cls.model_validate(raw)
        except ValidationError as exc:
            raise ConfigError(f"Invalid run configuration: {exc}") from exc


class GeneratorSettings(BaseModel):
    """Defaults for the ``generate`` subcommand."""

    model_config = ConfigDict(extra="ignore")

    mode: str = "random-bb"
    blocks: int = 100
    block_size: str = "3:6"
    seed: int = 0
    independent: bool = True
    atpg_budget: int = 256

    @classmethod
    def from_config(cls, config: Optional[Mapping[str, Any]]) -> "GeneratorSettings":
        section = (config or {}).get("generator", {})
        try:
            return cls.model_validate(section if isinstance(section, Mapping) else {})
        except ValidationError as exc:
            raise ConfigError(f"Invalid generator configuration: {exc}") from exc


__all__ = [
    "DEFAULT_CONFIG_PATH",
    "GeneratorSettings",
    "OUT_DIR_ENV",
    "REPORT_FORMATS",
    "RunConfig",
    "load_app_config",
]
