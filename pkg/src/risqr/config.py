"""Key-value experiment configs.

Format (INI, parsed with :mod:`configparser`)::

    [experiment]            # header optional
    scheme = ris-quantum
    m = 16
    modes = 1
    k = 80
    visibility = 0.997
    n0_total = 1.5
    symbol_duration_us = 1000
    n0_grid = 0.3, 0.6, 0.9  # at most one *_grid key with several values
    trials = 5000
    seed = 7

    [geometry]              # optional; efficiencies then become detection-only
    l_ris = 0.1
    a_tx = 0.01
    a_rx = 0.01
    z0 = 1e5
    z1 = 1e5
    lambda = 1.55e-6, 1.31e-6

Precedence: built-in defaults < file < ``RISQR_<KEY>`` environment
variables < command-line overrides.
"""

from __future__ import annotations

import configparser
import os
from pathlib import Path
from typing import Callable, Mapping

from risqr.harness import AxisError, ExperimentSpec, SpecError
from risqr.optics import ChannelGeometry

ENV_PREFIX = "RISQR_"

EXIT_OK = 0
EXIT_MISSING_FILE = 3
EXIT_TYPE = 4
EXIT_UNKNOWN_KEY = 5
EXIT_INVALID_VALUE = 6
EXIT_AXES = 7
EXIT_UNKNOWN_PRESET = 8
EXIT_DEGENERATE = 9
EXIT_OUTPUT = 10


class ConfigError(Exception):
    exit_code = EXIT_INVALID_VALUE


class MissingConfigFile(ConfigError):
    exit_code = EXIT_MISSING_FILE


class ConfigTypeError(ConfigError):
    exit_code = EXIT_TYPE


class UnknownKeyError(ConfigError):
    exit_code = EXIT_UNKNOWN_KEY


class InvalidValueError(ConfigError):
    exit_code = EXIT_INVALID_VALUE


class InconsistentAxesError(ConfigError):
    exit_code = EXIT_AXES


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in text.replace(";", ",").split(",") if x.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _us(text: str) -> float:
    return float(text) / 1e6


def _us_list(text: str) -> tuple:
    return tuple(v / 1e6 for v in _floats(text))


# config key -> (ExperimentSpec field, parser)
KEYS: dict[str, tuple[str, Callable]] = {
    "scheme": ("scheme", str),
    "m": ("M", int),
    "modes": ("S", int),
    "k": ("K", float),
    "visibility": ("visibility", float),
    "n0_total": ("n0", float),
    "symbol_duration_us": ("symbol_duration", _us),
    "time_bin_divisor": ("time_bin_divisor", float),
    "feedback_delay_us": ("feedback_delay", _us),
    "max_steps": ("max_steps", int),
    "accel_threshold": ("accel_threshold", float),
    "retention": ("retention", str),
    "efficiency_central": ("efficiency_central", float),
    "efficiency_other": ("efficiency_other", float),
    "ring_scaling": ("ring_scaling", str),
    "nbar_convention": ("nbar_convention", str),
    "n0_grid": ("n0_grid", _floats),
    "k_grid": ("k_grid", _floats),
    "t_grid_us": ("t_grid", _us_list),
    "s_grid": ("s_grid", _ints),
    "trials": ("trials", int),
    "seed": ("master_seed", int),
    "forced_truth": ("forced_truth", int),
    "record_trajectories": ("record_trajectories", _bool),
    "heatmap_bin_us": ("heatmap_bin", _us),
    "label": ("label", str),
}
GEOMETRY_KEYS = {"l_ris": float, "a_tx": float, "a_rx": float, "z0": float, "z1": float,
                 "lambda": _floats}


def read_config_file(path: str | os.PathLike) -> dict[str, dict[str, str]]:
    p = Path(path)
    if not p.is_file():
        raise MissingConfigFile(f"config file not found: {p}")
    text = p.read_text(encoding="utf-8")
    if not text.lstrip().startswith("["):
        text = "[experiment]\n" + text
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=str(p))
    except configparser.Error as exc:
        raise ConfigTypeError(f"malformed config: {exc}") from exc
    unknown_sections = set(cp.sections()) - {"experiment", "geometry"}
    if unknown_sections:
        raise UnknownKeyError(f"unknown config sections: {sorted(unknown_sections)}")
    return {s: dict(cp[s]) for s in cp.sections()}


def env_overrides(environ: Mapping[str, str] | None = None) -> dict[str, str]:
    environ = os.environ if environ is None else environ
    return {k[len(ENV_PREFIX):].lower(): v for k, v in environ.items()
            if k.startswith(ENV_PREFIX)}


def parse_config(path: str | os.PathLike | None = None,
                 overrides: Mapping[str, object] | None = None,
                 environ: Mapping[str, str] | None = None) -> ExperimentSpec:
    """Resolve file values, environment and overrides into a validated spec.

    ``overrides`` maps config keys to strings or already-typed values.
    """
    sections = read_config_file(path) if path is not None else {}
    raw: dict[str, object] = dict(sections.get("experiment", {}))
    raw.update(env_overrides(environ))
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})

    fields: dict[str, object] = {}
    for key, value in raw.items():
        if key not in KEYS:
            raise UnknownKeyError(f"unknown config key: {key!r}")
        name, parse = KEYS[key]
        fields[name] = _convert(key, value, parse)

    geo = sections.get("geometry")
    if geo:
        vals = {}
        for key, value in geo.items():
            if key not in GEOMETRY_KEYS:
                raise UnknownKeyError(f"unknown geometry key: {key!r}")
            vals[key] = _convert(key, value, GEOMETRY_KEYS[key])
        missing = set(GEOMETRY_KEYS) - set(vals)
        if missing:
            raise InvalidValueError(f"geometry block missing {sorted(missing)}")
        wavelengths = vals.pop("lambda")
        try:
            fields["geometry"] = ChannelGeometry(**vals)
        except ValueError as exc:
            raise InvalidValueError(str(exc)) from exc
        fields["wavelengths"] = wavelengths

    try:
        return ExperimentSpec(**fields)
    except AxisError as exc:
        raise InconsistentAxesError(str(exc)) from exc
    except (SpecError, ValueError) as exc:
        raise InvalidValueError(str(exc)) from exc


def _convert(key: str, value, parse):
    if not isinstance(value, str):
        if parse in (_floats, _ints, _us_list) and isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        else:
            value = str(value)
    try:
        return parse(value.strip())
    except ValueError as exc:
        raise ConfigTypeError(f"bad value for {key!r}: {value!r}") from exc
