"""Experiment configuration: INI-style ``key = value`` files grouped in
sections, typed against per-command defaults, with CLI overrides.

A file may hold a ``[run]`` section (``out``, ``seed``) and one section per
command.  Unknown sections and keys are rejected with the file line.
"""
from __future__ import annotations

import configparser
import copy
import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

__all__ = ["ConfigError", "ExperimentConfig", "COMMANDS", "DEFAULTS", "load_config",
           "parse_grid", "parse_list"]

COMMANDS = ("solve", "illposed", "residual-scan", "strichartz", "kernel", "resonance")

# Defaults double as the type schema: every value's type fixes how the
# corresponding text is parsed.
DEFAULTS: dict[str, dict[str, Any]] = {
    "run": {"out": "runs", "seed": 20240607},
    "solve": {
        "grid": (128, 128), "dt": 5e-4, "T": 1.0, "s": 2.0, "m": (32,), "theta": 1.0,
        "observer_stride": 20, "init": "approx", "band": 4, "amplitude": 0.5,
    },
    "illposed": {
        "grid": (256, 256), "dt": 5e-4, "T": 1.0, "s": 2.0, "m": (16, 32, 64),
        "thetas": (1.0, -1.0), "observer_stride": 20, "t_fit_min": 0.1,
        "failure_factor": 0.5, "bound_slack": 1.25,
    },
    "residual-scan": {
        "theta": 1.0, "s": (1.7, 2.0, 2.5), "m": (8, 16, 32, 64), "n_times": 21,
        "literal": False,
    },
    "strichartz": {
        "N": (4, 8, 16, 32, 64), "count": 64, "n_time": 65, "oversample": 4,
        "s_prime": (0.75, 0.5), "global_bands": (4, 8, 16), "global_count": 8,
        "global_n_time": 257, "commutator_bands": (8, 16), "commutator_s": (1.0, 2.0),
        "commutator_count": 200,
    },
    "kernel": {
        "N": (4, 8, 16), "n_t": 8, "n_grid": 64, "truncation": 32,
        "compare_points": 4, "profile_N": (4, 8, 16, 32, 64), "profile_n_t": 8,
    },
    "resonance": {"B": 10, "brute_force_max": 10},
}

# CLI flag -> config key; a flag is valid only for commands that define the key.
FLAG_KEYS = {"seed": "seed", "grid": "grid", "dt": "dt", "s": "s", "m": "m", "N": "N"}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key and line."""


def parse_grid(text: str) -> tuple[int, int]:
    match = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", str(text))
    if not match:
        raise ValueError(f"grid must look like 128x128, got {text!r}")
    return int(match.group(1)), int(match.group(2))


def parse_list(text: str, kind: type) -> tuple:
    items = [p.strip() for p in str(text).split(",") if p.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(kind(p) for p in items)


def _parse_bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _coerce(key: str, text: str, default: Any) -> Any:
    if key == "grid":
        return parse_grid(text)
    if isinstance(default, bool):
        return _parse_bool(text)
    if isinstance(default, tuple):
        return parse_list(text, type(default[0]))
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return str(text).strip()


def _line_of(lines: list[str], section: str | None, key: str | None) -> int:
    """1-based line of ``key`` inside ``section`` (or of the section header)."""
    current = None
    for i, raw in enumerate(lines, 1):
        line = raw.strip()
        head = re.fullmatch(r"\[([^\]]+)\]", line)
        if head:
            current = head.group(1).strip()
            if key is None and current == section:
                return i
            continue
        if key is not None and current == section:
            name = re.split(r"[=:]", line, maxsplit=1)[0].strip()
            if name == key:
                return i
    return 0


@dataclass
class ExperimentConfig:
    """Resolved parameters of one command plus run-level settings."""

    command: str
    params: dict[str, Any]
    out: Path
    seed: int
    source: str | None = None
    source_sha256: str | None = None
    overrides: dict[str, Any] = field(default_factory=dict)

    def resolved(self) -> dict[str, Any]:
        """JSON-ready view of every resolved setting."""
        params = {k: list(v) if isinstance(v, tuple) else v for k, v in self.params.items()}
        return {"command": self.command, "out": str(self.out), "seed": self.seed,
                "params": params}

    def params_sha256(self) -> str:
        text = json.dumps(self.resolved()["params"], sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()


def load_config(command: str, path: str | Path | None = None,
                overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    """Merge defaults, an optional config file and CLI overrides for ``command``."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    params = copy.deepcopy(DEFAULTS[command])
    run = copy.deepcopy(DEFAULTS["run"])
    source = digest = None
    if path is not None:
        text = Path(path).read_text()
        source, digest = str(path), hashlib.sha256(text.encode()).hexdigest()
        lines = text.splitlines()
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str  # keys are case sensitive (T vs t)
        try:
            parser.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        for section in parser.sections():
            if section not in DEFAULTS:
                line = _line_of(lines, section, None)
                raise ConfigError(f"{path}:{line}: unknown section [{section}]")
            target = run if section == "run" else params if section == command else None
            for key, value in parser.items(section):
                schema = DEFAULTS[section]
                line = _line_of(lines, section, key)
                if key not in schema:
                    raise ConfigError(f"{path}:{line}: unknown key {key!r} in section [{section}]")
                try:
                    coerced = _coerce(key, value, schema[key])
                except ValueError as exc:
                    raise ConfigError(f"{path}:{line}: bad value for {key!r}: {exc}") from exc
                if target is not None:
                    target[key] = coerced
    applied = {}
    for flag, value in (overrides or {}).items():
        if value is None:
            continue
        key = FLAG_KEYS.get(flag, flag)
        if key in ("out", "seed"):
            run[key] = value
        elif key in params:
            params[key] = _coerce(key, value, params[key]) if isinstance(value, str) else value
        else:
            raise ConfigError(f"flag --{flag} does not apply to command {command!r}")
        applied[flag] = value
    return ExperimentConfig(command, params, Path(run["out"]), int(run["seed"]),
                            source, digest, applied)
