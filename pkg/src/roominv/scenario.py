"""Scenario configuration and the JSON manifests written beside WAV sets.

A scenario is a nested JSON document::

    {"room": {"dims": [...], "abar": 0.0407, "reflection": null,
              "speed_of_sound": 346.58, "sample_rate": 44100, "ir_length": 65536},
     "sources": [[x, y, z], ...],
     "receivers": [[x, y, z], ...],
     "inversion": {"beta": 0.01, "modeling_delay": 0.5, "window_tau": 0.06, "fft_length": null},
     "eval": {"t_min": 0.0025, "early_window_T": 0.1, "mse_interval": 0.02},
     "degradation": {"enabled": true, "wall_highpass_hz": 100.0,
                     "air_db_per_10khz_per_34m": 8.0, "abar_offset": 0.0}}

Missing keys take the defaults below (the plywood test cube with two pistols
and two microphones).  ``room.reflection``, when not null, takes precedence
over ``room.abar``.
"""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .core import (
    CUBE_ABAR,
    CUBE_DIMS,
    GeometryError,
    IR_LENGTH,
    MICROPHONES,
    PISTOLS,
    SAMPLE_RATE,
    SPEED_OF_SOUND,
    InversionConfig,
    Point3,
    RoomInvError,
    RoomModel,
    as_point,
    validate_geometry,
)
from .degrade import DegradationConfig
from .evaluation import EvalConfig, reflection_from_absorptivity

MANIFEST_NAME = "manifest.json"
DEFAULT_TAU = 0.06


class ConfigError(RoomInvError, ValueError):
    pass


class ManifestError(RoomInvError, OSError):
    pass


DEFAULTS = {
    "room": {
        "dims": list(CUBE_DIMS),
        "abar": CUBE_ABAR,
        "reflection": None,
        "speed_of_sound": SPEED_OF_SOUND,
        "sample_rate": SAMPLE_RATE,
        "ir_length": IR_LENGTH,
    },
    "sources": [list(p) for p in PISTOLS],
    "receivers": [list(p) for p in MICROPHONES],
    "inversion": {"beta": 1e-2, "modeling_delay": 0.5, "window_tau": DEFAULT_TAU, "fft_length": None},
    "eval": {"t_min": 0.0025, "early_window_T": 0.1, "mse_interval": 0.02},
    "degradation": {
        "enabled": True,
        "wall_highpass_hz": 100.0,
        "air_db_per_10khz_per_34m": 8.0,
        "abar_offset": 0.0,
    },
}


def _merge(base: dict, extra: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in extra.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} must be a table")
            out[key] = _merge(base[key], value, where + ".")
        else:
            out[key] = copy.deepcopy(value)
    return out


def parse_override(text: str) -> tuple[list[str], object]:
    """Split ``a.b.c=value``; the value is read as JSON when possible, else kept as a string."""
    key, sep, raw = text.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override must look like key=value, got {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


def apply_overrides(doc: dict, overrides) -> dict:
    doc = copy.deepcopy(doc)
    for text in overrides or ():
        keys, value = parse_override(text)
        node = doc
        for k in keys[:-1]:
            if not isinstance(node.get(k), dict):
                raise ConfigError(f"unknown config key {'.'.join(keys)!r}")
            node = node[k]
        if keys[-1] not in node or isinstance(node[keys[-1]], dict):
            raise ConfigError(f"unknown config key {'.'.join(keys)!r}")
        node[keys[-1]] = value
    return doc


@dataclass(frozen=True)
class ScenarioConfig:
    room: RoomModel
    sources: tuple[Point3, ...]
    receivers: tuple[Point3, ...]
    inversion: InversionConfig
    eval: EvalConfig
    degradation: DegradationConfig
    doc: dict

    @classmethod
    def from_dict(cls, doc: dict | None = None, overrides=()) -> "ScenarioConfig":
        doc = apply_overrides(_merge(DEFAULTS, doc or {}), overrides)
        try:
            room_doc = dict(doc["room"])
            reflection = room_doc.pop("reflection")
            abar = room_doc.pop("abar")
            if reflection is None:
                if abar is None:
                    raise ConfigError("room needs either abar or reflection")
                reflection = reflection_from_absorptivity(float(abar))
            room = RoomModel(
                tuple(room_doc["dims"]),
                reflection,
                speed_of_sound=float(room_doc["speed_of_sound"]),
                sample_rate=float(room_doc["sample_rate"]),
                ir_length=room_doc["ir_length"],
            )
            sources = tuple(as_point(p) for p in doc["sources"])
            receivers = tuple(as_point(p) for p in doc["receivers"])
            if not sources or not receivers:
                raise ConfigError("need at least one source and one receiver")
            inv = doc["inversion"]
            tau = inv["window_tau"]
            inversion = InversionConfig(
                beta=float(inv["beta"]),
                modeling_delay=float(inv["modeling_delay"]),
                fft_length=inv["fft_length"],
                window_tau=None if tau is None else float(tau),
            )
            ev = doc["eval"]
            evaluation = EvalConfig(
                t_min=float(ev["t_min"]),
                early_window_T=float(ev["early_window_T"]),
                modeling_delay=inversion.modeling_delay,
                mse_interval=float(ev["mse_interval"]),
            )
            dg = doc["degradation"]
            degradation = DegradationConfig(
                enabled=bool(dg["enabled"]),
                wall_highpass_hz=float(dg["wall_highpass_hz"]),
                air_db_per_10khz_per_34m=float(dg["air_db_per_10khz_per_34m"]),
                abar_offset=float(dg["abar_offset"]),
            )
        except (ConfigError, GeometryError):
            raise
        except (RoomInvError, TypeError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc
        validate_geometry(room, sources + receivers)
        return cls(room, sources, receivers, inversion, evaluation, degradation, doc)

    @classmethod
    def load(cls, path: str | os.PathLike | None, overrides=()) -> "ScenarioConfig":
        if path is None:
            return cls.from_dict({}, overrides)
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ManifestError(f"cannot read config {path}: {exc}") from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be a table")
        return cls.from_dict(doc, overrides)

    def replace_doc(self, overrides) -> "ScenarioConfig":
        return ScenarioConfig.from_dict(self.doc, overrides)

    @property
    def M(self) -> int:
        return len(self.receivers)

    @property
    def L(self) -> int:
        return len(self.sources)


def write_manifest(directory: str | os.PathLike, manifest: dict) -> Path:
    path = Path(directory) / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def read_manifest(path: str | os.PathLike) -> tuple[dict, Path]:
    """Read a manifest given its file or its directory; returns the document and its directory."""
    p = Path(path)
    if p.is_dir():
        p = p / MANIFEST_NAME
    try:
        doc = json.loads(p.read_text())
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{p}: invalid JSON: {exc}") from exc
    for key in ("kind", "scenario", "files"):
        if key not in doc:
            raise ManifestError(f"{p}: manifest has no {key!r} entry")
    return doc, p.parent
