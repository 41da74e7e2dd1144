"""Run configuration: a flat JSON document plus command-line overrides.

Every key is validated before any computation runs, and unknown keys are
rejected. Nested ``reinforce`` / ``gradient`` sections hold optimizer
hyperparameters; overrides address them as ``reinforce.step_size``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from typing import Any

from .optimizers import GradientSettings, OptimizerConfig, ReinforceSettings
from .security_rate import CONDITIONAL_FORMS, LinkParams, channel_transmittance
from .experiments import SweepSpec

COMMANDS = ("rrc", "evaluate", "optimize", "sweep", "kse-grid", "freqresp", "montecarlo")


class ConfigError(ValueError):
    """Invalid configuration; ``str()`` is a single line."""


def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _unit(x):
    return 0 <= x <= 1


def _odd(x):
    return x >= 1 and x % 2 == 1


# key -> (kind, check, default, description); a trailing "?" on kind allows null
_FIELDS: dict[str, tuple[str, Any, Any, str]] = {
    "command": ("str", lambda v: v in COMMANDS, "sweep", f"one of {', '.join(COMMANDS)}"),
    "output_dir": ("str", None, "out", ""),
    "output": ("str?", None, None, ""),
    "seed": ("int", lambda v: 0 <= v < 2**64, 0, "a 64-bit unsigned integer"),
    "threads": ("int?", lambda v: v >= 1, None, ">= 1"),
    # link
    "n_bar": ("float", _pos, 10.0, "> 0"),
    "n_ch": ("float", _nonneg, 0.0, ">= 0"),
    "beta": ("float", _unit, 0.95, "in [0, 1]"),
    "roll_off": ("float", _unit, 0.1, "in [0, 1]"),
    "distance_km": ("float", _nonneg, 0.0, ">= 0"),
    "tau_ch": ("float?", lambda v: 0 < v <= 1, None, "in (0, 1]"),
    "attenuation_db_per_km": ("float", _nonneg, 0.2, ">= 0"),
    "conditional": ("str", lambda v: v in CONDITIONAL_FORMS, "corrected", f"one of {CONDITIONAL_FORMS}"),
    # filters
    "sps": ("int", lambda v: v >= 1, 4, ">= 1"),
    "num_taps": ("int?", _odd, None, "a positive odd integer"),
    "tx_num_taps": ("int", _odd, 13, "a positive odd integer"),
    "rx_num_taps": ("int", _odd, 101, "a positive odd integer"),
    "tx_file": ("str?", None, None, ""),
    "rx_file": ("str?", None, None, ""),
    "init_file": ("str?", None, None, ""),
    "filter_files": ("strs", None, [], ""),
    "num_points": ("int", lambda v: v >= 1, 4096, ">= 1"),
    # sweeps
    "distances_km": ("floats", lambda v: v >= 0, [float(d) for d in range(0, 101, 10)], "nonnegative"),
    "roll_offs": ("floats", _unit, [0.1, 0.5, 0.9], "in [0, 1]"),
    "n_bars": ("floats", _pos, [10.0, 100.0, 1000.0], "> 0"),
    "n_chs": ("floats", _nonneg, [0.0], ">= 0"),
    "noise_sweep": ("floats?", _nonneg, [1e-4, 1e-3, 1e-2], ">= 0"),
    "kse_distance_km": ("float", _nonneg, 50.0, ">= 0"),
    "optimize": ("bool", None, True, ""),
    "warm_start": ("bool", None, True, ""),
    "clamp_skr": ("bool", None, False, ""),
    # optimizer
    "method": ("str", lambda v: v in ("reinforce", "gradient"), "reinforce", "reinforce or gradient"),
    "max_iterations": ("int", lambda v: v >= 1, 5000, ">= 1"),
    # monte carlo
    "num_symbols": ("int", lambda v: v >= 1, 100000, ">= 1"),
    "mc_tolerance": ("float", _pos, 0.05, "> 0"),
    "symbols_csv": ("str?", None, None, ""),
}

_SECTIONS = {"reinforce": ReinforceSettings, "gradient": GradientSettings}


@dataclass(frozen=True)
class RunConfig:
    values: dict
    reinforce: ReinforceSettings = field(default_factory=ReinforceSettings)
    gradient: GradientSettings = field(default_factory=GradientSettings)

    def __getattr__(self, name):
        values = object.__getattribute__(self, "values")
        if name in values:
            return values[name]
        raise AttributeError(name)

    def link_params(self, distance_km: float | None = None) -> LinkParams:
        d = self.distance_km if distance_km is None else distance_km
        tau = self.tau_ch if self.tau_ch is not None else channel_transmittance(
            d, self.attenuation_db_per_km
        )
        return LinkParams(
            n_bar=self.n_bar,
            tau_ch=tau,
            n_ch=self.n_ch,
            beta=self.beta,
            roll_off=self.roll_off,
            conditional=self.conditional,
        )

    def optimizer_config(self, init=None) -> OptimizerConfig:
        return OptimizerConfig(
            method=self.method,
            num_taps=self.tx_num_taps,
            max_iterations=self.max_iterations,
            seed=self.seed,
            init=init,
            reinforce=self.reinforce,
            gradient=self.gradient,
        )

    def sweep_spec(self, **changes) -> SweepSpec:
        spec = SweepSpec(
            distances_km=self.distances_km,
            roll_offs=self.roll_offs,
            n_bars=self.n_bars,
            n_chs=self.n_chs,
            attenuation_db_per_km=self.attenuation_db_per_km,
            tx_num_taps=self.tx_num_taps,
            rx_num_taps=self.rx_num_taps,
            sps=self.sps,
            beta=self.beta,
            optimize=self.optimize,
            optimizer=self.optimizer_config(),
            warm_start=self.warm_start,
            conditional=self.conditional,
        )
        return replace(spec, **changes) if changes else spec


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _coerce(key: str, kind: str, value):
    optional = kind.endswith("?")
    base = kind.rstrip("?")
    if value is None:
        if optional:
            return None
        raise ConfigError(f"{key}: must not be null")
    if base == "float":
        if not _is_num(value) or not math.isfinite(value):
            raise ConfigError(f"{key}: expected a finite number, got {value!r}")
        return float(value)
    if base == "int":
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if base == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true or false, got {value!r}")
        return value
    if base == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    if base == "floats":
        if not isinstance(value, list) or not all(_is_num(v) and math.isfinite(v) for v in value):
            raise ConfigError(f"{key}: expected a list of numbers, got {value!r}")
        return [float(v) for v in value]
    if base == "strs":
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ConfigError(f"{key}: expected a list of strings, got {value!r}")
        return list(value)
    raise AssertionError(kind)


def _check(key: str, value):
    kind, check, _, desc = _FIELDS[key]
    value = _coerce(key, kind, value)
    if value is None or check is None:
        return value
    items = value if isinstance(value, list) else [value]
    for v in items:
        if not check(v):
            raise ConfigError(f"{key}: must be {desc}, got {v!r}")
    if kind == "floats" and not value:
        raise ConfigError(f"{key}: must be a nonempty list")
    return value


def _section(name: str, raw) -> Any:
    cls = _SECTIONS[name]
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected an object, got {raw!r}")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for k, v in raw.items():
        if k not in known:
            raise ConfigError(f"{name}.{k}: unknown key")
        if not _is_num(v) or not math.isfinite(v):
            raise ConfigError(f"{name}.{k}: expected a finite number, got {v!r}")
        kwargs[k] = v
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _parse_document(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"syntax error at line {exc.lineno} column {exc.colno} (offset {exc.pos}): {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a JSON object")
    return doc


def parse_config(text: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Build a validated :class:`RunConfig`.

    ``overrides`` maps keys (``"n_bar"``, ``"reinforce.sigma_init"``) to values and
    is applied after the file contents.
    """
    doc = _parse_document(text) if text and text.strip() else {}
    merged = dict(doc)
    for key, value in (overrides or {}).items():
        if "." in key:
            section, sub = key.split(".", 1)
            if section not in _SECTIONS:
                raise ConfigError(f"{key}: unknown key")
            merged[section] = dict(merged.get(section) or {}, **{sub: value})
        else:
            merged[key] = value

    values = {}
    for key in merged:
        if key not in _FIELDS and key not in _SECTIONS:
            raise ConfigError(f"{key}: unknown key")
    for key, (_, _, default, _) in _FIELDS.items():
        values[key] = _check(key, merged[key]) if key in merged else default
    if values["noise_sweep"] is None:
        values["noise_sweep"] = []
    sections = {name: _section(name, merged.get(name, {})) for name in _SECTIONS}
    cfg = RunConfig(values, **sections)

    # construct the owning types once so cross-field problems surface now
    try:
        cfg.link_params()
        cfg.sweep_spec()
        cfg.optimizer_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def describe_defaults() -> str:
    lines = []
    for key, (_, _, default, desc) in _FIELDS.items():
        extra = f" ({desc})" if desc else ""
        lines.append(f"  {key} = {json.dumps(default)}{extra}")
    for name, cls in _SECTIONS.items():
        for f in fields(cls):
            lines.append(f"  {name}.{f.name} = {json.dumps(f.default)}")
    return "\n".join(lines)
