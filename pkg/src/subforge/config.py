"""Pipeline configuration: defaults, file loading, validation.

Configuration is data, not code. Every tunable constant of the pipeline
lives in exactly one field here; the rest of the package never hardcodes
one of these numbers.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib  # type: ignore[no-redef]

from .model import SubforgeError

__all__ = [
    "ENV_CONFIG",
    "ConfigError",
    "PipelineConfig",
    "validate_config",
    "load_config",
    "dumps_config",
    "config_to_dict",
]

ENV_CONFIG = "SUBFORGE_CONFIG"


class ConfigError(SubforgeError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    sampling_period_ms: int = 100
    roi: tuple[float, float, float, float] = (0.0, 0.75, 1.0, 1.0)  # x0, y0, x1, y1
    conf_gate: float = 0.01
    retention_t_ms: int = 500
    denylist: frozenset[str] = frozenset("|_~`\\^")
    ellipsis_set: frozenset[str] = frozenset({"…", "...", "⋯"})
    singing_min_chars: int = 4
    singing_secs_per_char: float = 0.4
    candidate_gap_ms: int = 2000
    overlap_theta: float = 0.5
    adjacency_gap_ms: int = 200


def _int_field(key: str, value: object, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{key} out of [{minimum},inf): {value}")
    return value


def _unit_field(key: str, value: object) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{key} out of [0,1]: {value}")
    return float(value)


def _roi_field(value: object) -> tuple[float, float, float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 4:
        raise ConfigError(f"roi must be [x0, y0, x1, y1], got {value!r}")
    x0, y0, x1, y1 = (_unit_field("roi", v) for v in value)
    if not (x0 < x1 and y0 < y1):
        raise ConfigError(f"roi must satisfy x0 < x1 and y0 < y1: {value!r}")
    return (x0, y0, x1, y1)


def _charset_field(key: str, value: object, single_char: bool) -> frozenset[str]:
    if isinstance(value, (str, bytes)) or not hasattr(value, "__iter__"):
        raise ConfigError(f"{key} must be a list of strings, got {value!r}")
    items = list(value)
    for item in items:
        if not isinstance(item, str) or not item:
            raise ConfigError(f"{key} entries must be non-empty strings, got {item!r}")
        if single_char and len(item) != 1:
            raise ConfigError(f"{key} entries must be single characters, got {item!r}")
    return frozenset(items)


def validate_config(raw: dict) -> PipelineConfig:
    """Build a PipelineConfig from a parsed mapping; unknown keys are an error."""
    known = {f.name for f in fields(PipelineConfig)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown config key: {key}")
    kwargs: dict = {}
    if "sampling_period_ms" in raw:
        kwargs["sampling_period_ms"] = _int_field("sampling_period_ms", raw["sampling_period_ms"], 1)
    if "roi" in raw:
        kwargs["roi"] = _roi_field(raw["roi"])
    if "conf_gate" in raw:
        kwargs["conf_gate"] = _unit_field("conf_gate", raw["conf_gate"])
    if "retention_t_ms" in raw:
        kwargs["retention_t_ms"] = _int_field("retention_t_ms", raw["retention_t_ms"], 0)
    if "denylist" in raw:
        kwargs["denylist"] = _charset_field("denylist", raw["denylist"], single_char=True)
    if "ellipsis_set" in raw:
        kwargs["ellipsis_set"] = _charset_field("ellipsis_set", raw["ellipsis_set"], single_char=False)
    if "singing_min_chars" in raw:
        kwargs["singing_min_chars"] = _int_field("singing_min_chars", raw["singing_min_chars"], 1)
    if "singing_secs_per_char" in raw:
        v = raw["singing_secs_per_char"]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0:
            raise ConfigError(f"singing_secs_per_char must be a positive number, got {v!r}")
        kwargs["singing_secs_per_char"] = float(v)
    if "candidate_gap_ms" in raw:
        kwargs["candidate_gap_ms"] = _int_field("candidate_gap_ms", raw["candidate_gap_ms"], 0)
    if "overlap_theta" in raw:
        kwargs["overlap_theta"] = _unit_field("overlap_theta", raw["overlap_theta"])
    if "adjacency_gap_ms" in raw:
        kwargs["adjacency_gap_ms"] = _int_field("adjacency_gap_ms", raw["adjacency_gap_ms"], 0)
    return PipelineConfig(**kwargs)


def load_config(path: str | None = None) -> PipelineConfig:
    """Load config from a file, the SUBFORGE_CONFIG fallback, or defaults."""
    if path is None:
        path = os.environ.get(ENV_CONFIG) or None
    if path is None:
        return PipelineConfig()
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"bad config {path}: {exc}") from exc
    return validate_config(raw)


def config_to_dict(cfg: PipelineConfig) -> dict:
    """JSON-safe mapping that validate_config accepts back unchanged."""
    return {
        "sampling_period_ms": cfg.sampling_period_ms,
        "roi": list(cfg.roi),
        "conf_gate": cfg.conf_gate,
        "retention_t_ms": cfg.retention_t_ms,
        "denylist": sorted(cfg.denylist),
        "ellipsis_set": sorted(cfg.ellipsis_set),
        "singing_min_chars": cfg.singing_min_chars,
        "singing_secs_per_char": cfg.singing_secs_per_char,
        "candidate_gap_ms": cfg.candidate_gap_ms,
        "overlap_theta": cfg.overlap_theta,
        "adjacency_gap_ms": cfg.adjacency_gap_ms,
    }


def _toml_value(value: object) -> str:
    if isinstance(value, bool):
        raise ConfigError(f"cannot serialize {value!r}")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        # JSON string escaping emits a valid TOML basic string
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, list):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise ConfigError(f"cannot serialize {value!r}")


def dumps_config(cfg: PipelineConfig) -> str:
    """Render a config as the flat key/value file format we read back."""
    mapping = config_to_dict(cfg)
    return "".join(f"{key} = {_toml_value(value)}\n" for key, value in mapping.items())
