"""Flat ``key=value`` configuration shared by the CLI and config files.

Every field of :class:`PreprocessConfig`, :class:`DetectorConfig` and
:class:`TrainConfig` is a valid key. Lines starting with
``#`` and blank lines are ignored.
"""
from __future__ import annotations

import dataclasses
from pathlib import Path

from ..bonsai.train import TrainConfig
from ..errors import ConfigError
from ..preprocess import PreprocessConfig
from ..rpeak import DetectorConfig

SECTIONS = (PreprocessConfig, DetectorConfig, TrainConfig)


def _field_types():
    types = {}
    for cls in SECTIONS:
        for f in dataclasses.fields(cls):
            types[f.name] = (cls, f.type if isinstance(f.type, str) else f.type.__name__)
    return types


FIELD_TYPES = _field_types()


def read_config_file(path):
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key = key.strip().replace("-", "_")
        if key not in FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def _coerce(key, value):
    if key not in FIELD_TYPES:
        raise ConfigError(f"unknown configuration key {key!r}")
    kind = FIELD_TYPES[key][1]
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        return str(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {value!r} as {kind}") from None


def build_configs(values):
    """``(PreprocessConfig, DetectorConfig, TrainConfig)`` from a flat mapping."""
    values = {k: _coerce(k, v) for k, v in values.items() if v is not None}
    built = []
    for cls in SECTIONS:
        names = {f.name for f in dataclasses.fields(cls)}
        built.append(cls(**{k: v for k, v in values.items() if k in names}))
    return tuple(built)


def flatten(*configs):
    out = {}
    for cfg in configs:
        out.update(dataclasses.asdict(cfg))
    return out
