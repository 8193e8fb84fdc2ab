"""Run configuration: defaults, JSON loading, flag merging, unit rescaling.

Precedence, highest first: command-line flags, JSON config file, per-size
defaults (when the processed side matches a known setting), built-in
defaults. The FASTSPEC_SEED environment variable backs the seed when
neither a flag nor the JSON sets one.

Unit convention: thresholds and intensity scales are quoted for 0-255
intensities, the convention used when reporting parameters; internally all
intensities live in [0, 1], so config resolution divides t by 255**2 (it is
a variance) and sigma_i by 255 once. Geometry parameters (r, R, sigma_x,
sigma_c, alpha) are unit-free or in pixels and pass through unchanged.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .affinity import AffinityParams
from .errors import ConfigError

BASE_DEFAULTS = {
    "algorithm": "mfsc",
    "k": 2,
    "t": 10.0,        # 0-255 domain; divided by 255**2 at resolution
    "r": 20.0,
    "R": 40.0,
    "sigma_x": 4.0,
    "sigma_i": 8.0,   # 0-255 domain; divided by 255 at resolution
    "sigma_c": 0.2,
    "alpha": 0.45,
    "l_init": 3,
    "k_int": 4,
    "mode": "approx",
    "seed": 42,
    "jobs": 1,
    "out_dir": ".",
    "geometry": "rescale",
    "min_block_side": 2,
    "clusterer": None,        # per-algorithm default: kmeans for ncut, fcm otherwise
    "cluster_superpixels": False,
    "literal_dice": False,
    "dump_tree": False,
    "dump_matrices": False,
    "regularize": False,
    "max_iter": None,
    "tol": 1e-8,
}

# protocol defaults by processed image side; single-image runs keep R = 40
# at 128 while batch sweeps use the batch table
SIZE_DEFAULTS_SINGLE = {
    128: {"R": 40.0, "t": 10.0, "r": 20.0},
    256: {"R": 50.0, "t": 12.0, "r": 15.0},
    512: {"R": 80.0, "t": 15.0, "r": 10.0},
}
SIZE_DEFAULTS_BATCH = {
    128: {"R": 30.0, "t": 10.0, "r": 20.0},
    256: {"R": 50.0, "t": 12.0, "r": 15.0},
    512: {"R": 80.0, "t": 15.0, "r": 10.0},
}

_FIELD_TYPES = {
    "algorithm": str, "k": int, "t": (int, float), "r": (int, float),
    "R": (int, float), "sigma_x": (int, float), "sigma_i": (int, float),
    "sigma_c": (int, float), "alpha": (int, float), "l_init": int,
    "k_int": int, "mode": str, "seed": int, "jobs": int, "out_dir": str,
    "geometry": str, "min_block_side": int, "clusterer": str,
    "cluster_superpixels": bool, "literal_dice": bool, "dump_tree": bool,
    "dump_matrices": bool, "regularize": bool, "max_iter": int,
    "tol": (int, float), "image": str, "folder": str, "gt": str,
}

_CHOICES = {
    "algorithm": {"ncut", "fsc", "mfsc"},
    "mode": {"exact", "approx"},
    "geometry": {"rescale", "pad"},
    "clusterer": {"kmeans", "fcm"},
}

_SCALING_TYPES = {
    "sides": list, "ncut_sides": list, "repeats": int, "seed": int,
    "algorithms": list,
}


def _check_field(path: str, key: str, value, types):
    if key not in types:
        raise ConfigError(path, "unknown field")
    expected = types[key]
    if expected is int and isinstance(value, bool):
        raise ConfigError(path, "expected an integer")
    if not isinstance(value, expected):
        raise ConfigError(path, f"expected {getattr(expected, '__name__', expected)}")
    if key in _CHOICES and value not in _CHOICES[key]:
        raise ConfigError(path, f"must be one of {sorted(_CHOICES[key])}")


def load_config_file(path) -> dict:
    """Load and validate a JSON config; raises ConfigError with field paths."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(str(path), "top level must be an object")
    out = {}
    for key, value in raw.items():
        if key == "scaling":
            if not isinstance(value, dict):
                raise ConfigError("scaling", "expected an object")
            for sk, sv in value.items():
                _check_field(f"scaling.{sk}", sk, sv, _SCALING_TYPES)
            out["scaling"] = value
            continue
        _check_field(key, key, value, _FIELD_TYPES)
        out[key] = value
    return out


@dataclass
class RunConfig:
    """Merged settings plus the record of which keys the user pinned."""

    values: dict = field(default_factory=dict)
    explicit: set = field(default_factory=set)
    scaling: dict | None = None

    def __getattr__(self, name):
        values = object.__getattribute__(self, "values")
        if name in values:
            return values[name]
        raise AttributeError(name)

    def resolved(self, side: int | None = None, batch: bool = False) -> dict:
        """Final parameter dict for one run, size defaults applied."""
        out = dict(self.values)
        table = SIZE_DEFAULTS_BATCH if batch else SIZE_DEFAULTS_SINGLE
        if side in table:
            for key, val in table[side].items():
                if key not in self.explicit:
                    out[key] = val
        return out

    def affinity_params(self, side: int | None = None, batch: bool = False) -> AffinityParams:
        r = self.resolved(side, batch)
        return AffinityParams(
            r=float(r["r"]),
            R=float(r["R"]),
            sigma_x=float(r["sigma_x"]),
            sigma_i=float(r["sigma_i"]) / 255.0,
            sigma_c=float(r["sigma_c"]),
            alpha=float(r["alpha"]),
        )

    def internal_t(self, side: int | None = None, batch: bool = False) -> float:
        return float(self.resolved(side, batch)["t"]) / 255.0 ** 2


def merge_config(flag_values: dict, json_values: dict) -> RunConfig:
    """Apply the precedence chain and the FASTSPEC_SEED fallback."""
    values = dict(BASE_DEFAULTS)
    explicit = set()
    scaling = json_values.pop("scaling", None) if json_values else None
    for src in (json_values or {}, flag_values or {}):
        for key, val in src.items():
            if val is None:
                continue
            values[key] = val
            explicit.add(key)
    if "seed" not in explicit:
        env = os.environ.get("FASTSPEC_SEED")
        if env is not None:
            try:
                values["seed"] = int(env)
            except ValueError as exc:
                raise ConfigError("FASTSPEC_SEED", "expected an integer") from exc
    return RunConfig(values=values, explicit=explicit, scaling=scaling)
