"""Pipeline configuration: one dataclass tree, loadable from TOML.

Unknown keys are rejected so typos fail loudly. ``lesionkit --print-config``
dumps the defaults in the accepted format.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .ensemble import ClusterConfig, EnsembleConfig
from .pipeline import FeatureConfig
from .threshold import ThresholdConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    max_dim: int = 0  # 0 = never downsample
    jobs: int = 1
    sigma_rgb: float = 30.0
    threshold: ThresholdConfig = field(default_factory=ThresholdConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)


_SECTIONS = {
    "threshold": ThresholdConfig,
    "cluster": ClusterConfig,
    "ensemble": EnsembleConfig,
    "features": FeatureConfig,
}
_TOP_KEYS = {"seed", "max_dim", "jobs", "sigma_rgb"}


def _build_section(cls, data: dict, section: str):
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"[{section}] unknown keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key == "k_range":
            value = tuple(int(v) for v in value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from exc


def load_config(path: str) -> PipelineConfig:
    with open(path, "rb") as f:
        data = tomllib.load(f)
    return config_from_dict(data)


def config_from_dict(data: dict) -> PipelineConfig:
    unknown = set(data) - _TOP_KEYS - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    kwargs = {k: data[k] for k in _TOP_KEYS if k in data}
    for name, cls in _SECTIONS.items():
        if name in data:
            kwargs[name] = _build_section(cls, data[name], name)
    cfg = PipelineConfig(**kwargs)
    if cfg.jobs < 1:
        raise ConfigError("jobs must be >= 1")
    if cfg.max_dim < 0:
        raise ConfigError("max_dim must be >= 0")
    return cfg


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot render {type(v)} as TOML")


def dump_config(cfg: PipelineConfig) -> str:
    """Render a config as TOML accepted by load_config."""
    lines = []
    for key in sorted(_TOP_KEYS):
        lines.append(f"{key} = {_toml_value(getattr(cfg, key))}")
    for name in _SECTIONS:
        section = getattr(cfg, name)
        lines.append("")
        lines.append(f"[{name}]")
        for f in dataclasses.fields(section):
            lines.append(f"{f.name} = {_toml_value(getattr(section, f.name))}")
    return "\n".join(lines) + "\n"
