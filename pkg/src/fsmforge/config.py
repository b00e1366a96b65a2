"""TOML configuration for curation and evaluation runs.

Example::

    [provider]
    kind = "llm"
    endpoint = "https://api.example.com/v1"
    model = "some-model"
    token_env = "OPENAI_API_KEY"
    retries = 3
    max_in_flight = 4

    [curation]
    attempt_factor = 4
    tail_factor = 2

    [eval]
    sim_cmd = "iverilog -g2012 -o sim {sources} && vvp sim"
    timeout = 60
    sim_jobs = 1

Command-line flags override anything set here.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from fsmforge.errors import FsmError
from fsmforge.semantics import LlmConfig


class ConfigError(FsmError):
    pass


@dataclass
class Config:
    provider: str = "mock"
    llm: LlmConfig | None = None
    attempt_factor: int = 4
    tail_factor: int = 2
    jobs: int | None = None
    sim_cmd: str | None = None
    sim_timeout: float = 60.0
    sim_jobs: int = 1
    extra: dict = field(default_factory=dict)


_SECTIONS = {
    "provider": {"kind", "endpoint", "model", "token_env", "retries", "max_in_flight", "timeout", "max_tokens"},
    "curation": {"attempt_factor", "tail_factor", "jobs"},
    "eval": {"sim_cmd", "timeout", "sim_jobs", "jobs"},
}


def parse_config(text: str) -> Config:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"invalid TOML: {e}") from None
    for section, body in raw.items():
        if section not in _SECTIONS or not isinstance(body, dict):
            raise ConfigError(f"unknown config section [{section}]")
        unknown = set(body) - _SECTIONS[section]
        if unknown:
            raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")

    prov = raw.get("provider", {})
    cur = raw.get("curation", {})
    ev = raw.get("eval", {})
    cfg = Config(
        provider=prov.get("kind", "mock"),
        attempt_factor=int(cur.get("attempt_factor", 4)),
        tail_factor=int(cur.get("tail_factor", 2)),
        jobs=cur.get("jobs", ev.get("jobs")),
        sim_cmd=ev.get("sim_cmd"),
        sim_timeout=float(ev.get("timeout", 60.0)),
        sim_jobs=int(ev.get("sim_jobs", 1)),
    )
    if cfg.provider not in ("mock", "llm"):
        raise ConfigError(f"provider kind must be 'mock' or 'llm', not {cfg.provider!r}")
    if cfg.provider == "llm":
        missing = [k for k in ("endpoint", "model") if k not in prov]
        if missing:
            raise ConfigError(f"[provider] needs {missing} for kind = 'llm'")
        cfg.llm = LlmConfig(**{k: v for k, v in prov.items() if k != "kind"})
    if cfg.attempt_factor < 1 or cfg.tail_factor < 0 or cfg.sim_jobs < 1:
        raise ConfigError("attempt_factor and sim_jobs must be >= 1, tail_factor >= 0")
    return cfg


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return parse_config(text)
