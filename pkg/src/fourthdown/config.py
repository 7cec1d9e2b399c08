"""Key-value configuration files.

Format: one `key = value` pair per line; `#` starts a comment; blank
lines ignored. Used for column maps and fit settings. The environment
variable FOURTHDOWN_CONFIG names a default config path for the CLI.
"""

from __future__ import annotations

import os
from pathlib import Path

CONFIG_ENV_VAR = "FOURTHDOWN_CONFIG"


class ConfigError(ValueError):
    pass


def parse_config(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value.strip()
    return out


def load_config(path) -> dict[str, str]:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def default_config() -> dict[str, str]:
    path = os.environ.get(CONFIG_ENV_VAR)
    if path and Path(path).exists():
        return load_config(path)
    return {}
