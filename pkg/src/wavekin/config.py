"""Strict JSON run configuration.

Example::

    {
      "dispersion": {"kind": "massless", "c": 1.0},
      "field": {"type": "gaussians", "components": [
          {"A": [0.5, 0.0], "k0": [0.3, 0.5, 0.0], "delta": 0.1, "r0": [0, 0, 0]},
          {"A": 0.87, "k0": [1.2, 0.7, 0.0], "delta": 0.15}]},
      "grid": {"points_per_axis": 96, "margin": 6, "tol": 1e-8, "max_n": 257},
      "time": {"t0": 0, "t1": 10, "steps": 11},
      "output": {"format": "csv", "path": "trajectory.csv"}
    }

Unknown keys anywhere are rejected.  ``A`` may be a real number or a
``[re, im]`` pair; ``r0`` defaults to the origin.  A grid field is given as
``{"type": "grid", "file": "psi.kgrid"}`` with the path relative to the
config file (layout documented in :mod:`wavekin.field`).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path

import jsonschema

from .dispersion import CustomIsotropic, DispersionRelation, Massless, Quadratic, RelativisticMassive
from .errors import ConfigError, WavekinError
from .field import GaussianComponent, GaussianSuperposition, GridField, SpectralField
from .quadrature import DEFAULT_MARGIN, DEFAULT_MAX_N, DEFAULT_POINTS, MIN_MARGIN

_VEC3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_COMPLEX = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["dispersion", "field"],
    "properties": {
        "dispersion": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["quadratic", "massive", "massless", "custom"]},
                "m": {"type": "number", "minimum": 0},
                "c": {"type": "number", "exclusiveMinimum": 0},
                "table": {
                    "type": "array",
                    "minItems": 4,
                    "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                },
            },
        },
        "field": {
            "type": "object",
            "additionalProperties": False,
            "required": ["type"],
            "properties": {
                "type": {"enum": ["gaussians", "grid"]},
                "components": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["A", "k0", "delta"],
                        "properties": {
                            "A": _COMPLEX,
                            "k0": _VEC3,
                            "delta": {"type": "number", "exclusiveMinimum": 0},
                            "r0": _VEC3,
                        },
                    },
                },
                "file": {"type": "string"},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "points_per_axis": {"type": "integer", "minimum": 8},
                "margin": {"type": "number", "minimum": MIN_MARGIN},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_n": {"type": "integer", "minimum": 8},
            },
        },
        "time": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "t0": {"type": "number"},
                "t1": {"type": "number"},
                "steps": {"type": "integer", "minimum": 2},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"format": {"enum": ["csv", "json"]}, "path": {"type": "string"}},
        },
    },
}


@dataclass(frozen=True)
class RunConfig:
    dispersion: DispersionRelation
    field: SpectralField
    points_per_axis: int = DEFAULT_POINTS
    margin: float = DEFAULT_MARGIN
    tol: float = 1e-8
    max_n: int = DEFAULT_MAX_N
    t0: float = 0.0
    t1: float = 10.0
    steps: int = 11
    format: str = "csv"
    path: str | None = None

    def override(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


def _line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def _locate(text: str, path) -> tuple[int, int] | None:
    """Best-effort position of the last object key along ``path``."""
    pos, found = 0, None
    for part in path:
        if isinstance(part, str):
            m = re.compile(r'"%s"\s*:' % re.escape(part)).search(text, pos)
            if m is None:
                break
            pos = found = m.start()
    return None if found is None else _line_col(text, found)


def _schema_error(text: str, err: jsonschema.ValidationError) -> ConfigError:
    path = list(err.absolute_path)
    if err.validator == "additionalProperties" and isinstance(err.instance, dict):
        allowed = set(err.schema.get("properties", {}))
        extras = sorted(set(err.instance) - allowed)
        if extras:
            path = path + [extras[0]]
            where = _locate(text, path)
            loc = f" at line {where[0]}, column {where[1]}" if where else ""
            return ConfigError(f"unknown key {'/'.join(map(str, path))!r}{loc}")
    where = _locate(text, path)
    loc = f" at line {where[0]}, column {where[1]}" if where else ""
    return ConfigError(f"{'/'.join(map(str, path)) or '<root>'}{loc}: {err.message}")


def build_dispersion(d: dict) -> DispersionRelation:
    kind = d["kind"]
    c = d.get("c", 1.0)
    needs_m = kind in ("quadratic", "massive")
    if needs_m and "m" not in d:
        raise ConfigError(f"dispersion kind {kind!r} requires 'm'")
    if not needs_m and "m" in d:
        raise ConfigError(f"dispersion kind {kind!r} does not take 'm'")
    if (kind == "custom") != ("table" in d):
        raise ConfigError("'table' is required for, and only allowed with, kind 'custom'")
    if kind == "quadratic":
        return Quadratic(d["m"], c)
    if kind == "massive":
        return RelativisticMassive(d["m"], c)
    if kind == "massless":
        return Massless(c)
    return CustomIsotropic.from_table(d["table"], c)


def build_field(d: dict, base_dir: Path) -> SpectralField:
    if d["type"] == "gaussians":
        if "components" not in d or "file" in d:
            raise ConfigError("field type 'gaussians' takes 'components' only")
        comps = []
        for c in d["components"]:
            a = c["A"]
            amp = complex(a[0], a[1]) if isinstance(a, list) else complex(a)
            comps.append(GaussianComponent(amp, c["k0"], c["delta"], c.get("r0", (0.0, 0.0, 0.0))))
        return GaussianSuperposition(tuple(comps))
    if "file" not in d or "components" in d:
        raise ConfigError("field type 'grid' takes 'file' only")
    path = Path(d["file"])
    if not path.is_absolute():
        path = base_dir / path
    if not path.exists():
        raise ConfigError(f"grid file {str(path)!r} not found")
    return GridField.load(path)


def parse_config(text: str, base_dir: Path | str = ".") -> RunConfig:
    """Parse and validate a JSON config; every failure is a :class:`ConfigError`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        raise _schema_error(text, errors[0])
    try:
        disp = build_dispersion(doc["dispersion"])
        field = build_field(doc["field"], Path(base_dir))
    except ConfigError:
        raise
    except WavekinError as exc:
        raise ConfigError(str(exc)) from exc
    grid = doc.get("grid", {})
    time = doc.get("time", {})
    out = doc.get("output", {})
    cfg = RunConfig(
        dispersion=disp,
        field=field,
        points_per_axis=grid.get("points_per_axis", DEFAULT_POINTS),
        margin=float(grid.get("margin", DEFAULT_MARGIN)),
        tol=float(grid.get("tol", 1e-8)),
        max_n=grid.get("max_n", DEFAULT_MAX_N),
        t0=float(time.get("t0", 0.0)),
        t1=float(time.get("t1", 10.0)),
        steps=time.get("steps", 11),
        format=out.get("format", "csv"),
        path=out.get("path"),
    )
    if not cfg.t1 > cfg.t0:
        raise ConfigError(f"time: need t1 > t0, got {cfg.t0} and {cfg.t1}")
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc.strerror}") from exc
    return parse_config(text, path.parent)
