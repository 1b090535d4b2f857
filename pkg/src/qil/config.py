"""Run configuration: JSON loading and schema validation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import jsonschema

__all__ = ["ConfigError", "RunConfig", "load_schema", "load_config", "parse_config"]

_ALGORITHMS_BY_COMMAND = {
    "fit": {"pls", "plm"},
    "sample": {"am", "vis", "metropolis", "abc"},
}


class ConfigError(ValueError):
    """Invalid configuration file (maps to CLI exit code 2)."""


def load_schema() -> dict:
    ref = resources.files("qil") / "data" / "config_schema.json"
    return json.loads(ref.read_text())


@dataclass
class RunConfig:
    command: str
    model: dict = field(default_factory=dict)
    prior: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)
    algorithm: Optional[str] = None
    epsilon: float = 0.01
    iterations: int = 10000
    burn_in: float = 0.5
    seed: int = 0
    output: Optional[str] = None
    starts: Optional[list] = None
    theta0: Optional[list] = None
    proposal_var: Optional[float] = None
    abc: dict = field(default_factory=dict)
    simulate: dict = field(default_factory=dict)
    bench: dict = field(default_factory=dict)
    version: int = 1
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def model_name(self) -> Optional[str]:
        return self.model.get("name")

    def data_path(self) -> Optional[Path]:
        p = self.data.get("path")
        if p is None:
            return None
        path = Path(p)
        return path if path.is_absolute() else self.base_dir / path

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in ("version", "command", "model", "prior", "data", "algorithm",
                                             "epsilon", "iterations", "burn_in", "seed", "starts",
                                             "theta0", "proposal_var", "abc", "simulate", "bench")}
        return {k: v for k, v in out.items() if v not in (None, {}, [])}


def parse_config(doc: Any, base_dir: Optional[Path] = None) -> RunConfig:
    """Validate a decoded JSON document and build a :class:`RunConfig`.

    Raises
    ------
    ConfigError
        On schema violations, incompatible command/algorithm pairs or a
        missing data file.
    """
    try:
        jsonschema.validate(doc, load_schema())
    except jsonschema.ValidationError as err:
        loc = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {loc}: {err.message}") from None
    cfg = RunConfig(base_dir=Path.cwd() if base_dir is None else Path(base_dir), **doc)
    allowed = _ALGORITHMS_BY_COMMAND.get(cfg.command)
    if allowed is not None:
        if cfg.algorithm is None:
            raise ConfigError(f"command {cfg.command!r} needs an algorithm ({', '.join(sorted(allowed))})")
        if cfg.algorithm not in allowed:
            raise ConfigError(f"algorithm {cfg.algorithm!r} is not valid for command {cfg.command!r}")
    if cfg.command in ("fit", "sample") and not cfg.model_name:
        raise ConfigError(f"command {cfg.command!r} needs model.name")
    if cfg.command in ("fit", "sample", "select"):
        if "path" not in cfg.data and "fixture" not in cfg.data:
            raise ConfigError("data.path or data.fixture is required")
        path = cfg.data_path()
        if path is not None and not path.is_file():
            raise ConfigError(f"data file not found: {path}")
    if cfg.command == "bench" and not cfg.bench:
        raise ConfigError("command 'bench' needs a bench section")
    return cfg


def load_config(path, command: Optional[str] = None) -> RunConfig:
    """Read and validate a config file; ``command`` overrides its ``command`` key."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from None
    if command is not None and isinstance(doc, dict):
        doc["command"] = command
    return parse_config(doc, base_dir=path.parent)
