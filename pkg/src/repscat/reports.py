"""Run configuration files, versioned JSON/CSV reports and binary field dumps.

Configuration grammar
---------------------
A configuration is a flat text file of ``key = value`` lines; ``#`` and ``;``
start comments and keys are dotted paths::

    potential.alpha = 1.0
    potential.family = power        # none | power | shifted_power | gaussian | tabulated
    potential.coupling = 0.3
    potential.s = 1.0
    grid.L = 60
    spectral.lambdas = 0.5, 1, 2    # or spectral.range = 0.5:2:7 (start:stop:count)
    output.dir = runs/free

Values are parsed as numbers, booleans (``true``/``false``) or
comma-separated lists of those; anything else stays a string.

Field dumps
-----------
``write_field`` stores a :class:`~repscat.grid.WaveField` as one JSON header
line (``schema_version``, ``dtype``, ``length``, grid summary, label)
terminated by ``\\n`` followed by the node coordinates and the values as raw
little-endian ``float64`` / ``complex128`` arrays.
"""
from __future__ import annotations

import configparser
import csv
import json
import pathlib

import numpy as np

SCHEMA_VERSION = "1.0"
SECTIONS = ("potential", "grid", "spectral", "job", "output", "audit", "seed")


class ConfigError(ValueError):
    """Malformed or incomplete run configuration."""


def _parse_scalar(text: str):
    t = text.strip()
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        return t


def parse_value(text: str):
    if "," in text:
        return [_parse_scalar(p) for p in text.split(",") if p.strip()]
    return _parse_scalar(text)


def parse_config_text(text: str) -> dict:
    """Nested dict ``{block: {key: value}}`` from the flat grammar."""
    parser = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"),
                                       inline_comment_prefixes=("#", ";"),
                                       interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse configuration: {exc}") from exc
    out: dict = {}
    for key, raw in parser["config"].items():
        if "." in key:
            block, name = key.split(".", 1)
        else:
            block, name = "job", key
        out.setdefault(block, {})[name] = parse_value(raw)
    return out


def load_config(path) -> dict:
    path = pathlib.Path(path)
    if not path.exists():
        raise ConfigError(f"configuration file {path} not found")
    return parse_config_text(path.read_text())


def energies(spectral: dict) -> list:
    """Energy list from ``spectral.lambdas`` or ``spectral.range``."""
    if "lambdas" in spectral:
        lams = spectral["lambdas"]
        lams = lams if isinstance(lams, list) else ([] if lams == "" else [lams])
    elif "range" in spectral:
        parts = str(spectral["range"]).split(":")
        if len(parts) != 3:
            raise ConfigError("spectral.range must be start:stop:count")
        lams = list(np.linspace(float(parts[0]), float(parts[1]), int(parts[2])))
    else:
        lams = []
    try:
        lams = [float(x) for x in lams]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"spectral energies must be numbers: {lams}") from exc
    return lams


# ----------------------------------------------------------------- outputs
def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(np.real(obj)), float(np.imag(obj))]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"not serializable: {type(obj)}")


def write_json(path, payload: dict) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"schema_version": SCHEMA_VERSION, **payload}
    path.write_text(json.dumps(body, default=_default, indent=1, sort_keys=True))
    return path


def write_csv(path, rows: list, columns: list) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["schema_version"] + list(columns))
        for row in rows:
            w.writerow([SCHEMA_VERSION] + [row.get(c, "") for c in columns])
    return path


def write_field(path, field, extra: dict | None = None) -> pathlib.Path:
    """Binary dump of a wave field (header line + raw arrays)."""
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = field.grid
    header = {
        "schema_version": SCHEMA_VERSION,
        "dtype": "complex128",
        "coord_dtype": "float64",
        "byteorder": "little",
        "length": int(field.values.size),
        "label": field.label,
        "grid": {"L": grid.L, "order": grid.order, "ppw": grid.ppw, "ell": grid.ell,
                 "alpha": grid.alpha, "d": grid.d, "reduced": bool(grid.radial)},
    }
    if extra:
        header["extra"] = extra
    with path.open("wb") as fh:
        fh.write((json.dumps(header, default=_default) + "\n").encode())
        fh.write(np.ascontiguousarray(grid.x, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(field.values, dtype="<c16").tobytes())
    return path


def read_field(path):
    """``(header, x, values)`` from :func:`write_field` output."""
    data = pathlib.Path(path).read_bytes()
    cut = data.index(b"\n")
    header = json.loads(data[:cut].decode())
    n = header["length"]
    body = data[cut + 1:]
    x = np.frombuffer(body[: 8 * n], dtype="<f8")
    values = np.frombuffer(body[8 * n: 8 * n + 16 * n], dtype="<c16")
    return header, x, values


__all__ = [
    "SCHEMA_VERSION", "ConfigError", "parse_config_text", "load_config", "parse_value",
    "energies", "write_json", "write_csv", "write_field", "read_field",
]
