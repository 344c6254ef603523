"""Engine configuration: defaults < config file < environment < flags.

The config file is a flat key-value file (see README): one `key = value`
per line, `#` comments. Its path comes from $LLMRS_CONFIG, else
./llmrs.conf when present.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

ENV_EMBED_ENDPOINT = "LLMRS_EMBED_ENDPOINT"
ENV_SENTIMENT_ENDPOINT = "LLMRS_SENTIMENT_ENDPOINT"
ENV_SEED = "LLMRS_SEED"
ENV_CONFIG = "LLMRS_CONFIG"
CONFIG_FILENAME = "llmrs.conf"

PROVIDER_CHOICES = ("file", "http", "fallback")

_BOOL_VALUES = {"true": True, "on": True, "1": True, "yes": True,
                "false": False, "off": False, "0": False, "no": False}


@dataclass
class EngineConfig:
    embed_provider: str = "fallback"
    sentiment_provider: str = "fallback"
    embed_endpoint: str | None = None
    sentiment_endpoint: str | None = None
    embed_dim: int = 256
    seed: int = 42
    k_clusters: int = 5
    preselect_m: int = 50
    batch_size: int = 32
    display_x100: bool | None = None  # None: on for tables, off for JSON

    def validate(self) -> None:
        if self.k_clusters < 2:
            raise ValueError("k_clusters must be >= 2")
        if self.embed_provider not in PROVIDER_CHOICES:
            raise ValueError(f"embed_provider must be one of {PROVIDER_CHOICES}")
        if self.sentiment_provider not in PROVIDER_CHOICES:
            raise ValueError(f"sentiment_provider must be one of {PROVIDER_CHOICES}")
        if self.embed_dim < 8:
            raise ValueError("embed_dim must be >= 8")
        if self.preselect_m < 1 or self.batch_size < 1:
            raise ValueError("preselect_m and batch_size must be >= 1")


_INT_KEYS = {"seed", "k_clusters", "preselect_m", "batch_size", "embed_dim"}
_STR_KEYS = {"embed_provider", "sentiment_provider", "embed_endpoint", "sentiment_endpoint"}
_BOOL_KEYS = {"display_x100"}


def parse_config_file(path: str | Path) -> dict:
    """Parse the flat key-value config format; unknown keys are errors."""
    values: dict = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key in _INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: {key} must be an integer") from None
        elif key in _BOOL_KEYS:
            if value.lower() not in _BOOL_VALUES:
                raise ValueError(f"{path}:{lineno}: {key} must be a boolean")
            values[key] = _BOOL_VALUES[value.lower()]
        elif key in _STR_KEYS:
            values[key] = value
        else:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
    return values


def load_config(overrides: Mapping | None = None, env: Mapping[str, str] | None = None,
                cwd: str | Path | None = None) -> EngineConfig:
    """Resolve the effective config. ``overrides`` holds flag values (None
    entries are ignored, they mean "flag not given")."""
    env = os.environ if env is None else env
    cwd = Path.cwd() if cwd is None else Path(cwd)

    values: dict = {}
    config_path = env.get(ENV_CONFIG)
    if config_path:
        values.update(parse_config_file(config_path))
    elif (cwd / CONFIG_FILENAME).is_file():
        values.update(parse_config_file(cwd / CONFIG_FILENAME))

    if env.get(ENV_EMBED_ENDPOINT):
        values["embed_endpoint"] = env[ENV_EMBED_ENDPOINT]
    if env.get(ENV_SENTIMENT_ENDPOINT):
        values["sentiment_endpoint"] = env[ENV_SENTIMENT_ENDPOINT]
    if env.get(ENV_SEED):
        try:
            values["seed"] = int(env[ENV_SEED])
        except ValueError:
            raise ValueError(f"{ENV_SEED} must be an integer") from None

    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value

    config = EngineConfig(**values)
    config.validate()
    return config
