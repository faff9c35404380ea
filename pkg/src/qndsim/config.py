"""TOML run configuration.

Sections::

    [system]            kind, eps_a, eps_d, coupling | s2, degenerate, dipolar | d_xz
                        (or b0, gamma_a, gamma_d instead of eps_a, eps_d)
    [rates.<label>]     preset, gamma0, gin_up, gout_up, gin_down, gout_down,
                        gamma_t1, gamma_ff
    [protocol]          cycles, schedule, initial, sample_points, trace_cycles,
                        window, rates, fidelity
    [[protocol.segments]]  type = "pulse" (mode, fidelity) | "window" (duration, rates)
    [output]            trajectory, cycles, summary
    [sweep]             b0 = [start, stop, num], d_xz = [start, stop, num],
                        d_xz_log, gamma_e, gamma_n, coupling

Units: frequencies in Hz, rates in 1/s, times in s, field in T.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError
from .protocol import ProtocolSpec, Pulse, Schedule, Window
from .reservoir import PRESET_NAMES, RateSet, preset
from .spin_system import SpinSystemSpec, SystemKind, dipolar_xz

__all__ = ["RunConfig", "SweepConfig", "parse_config", "load_config", "apply_overrides", "BOTH"]

#: ``protocol.initial`` value that runs both data states and fits the rates
BOTH = "both"

_SECTIONS = {"system", "rates", "protocol", "output", "sweep"}
_SYSTEM_KEYS = {"kind", "eps_a", "eps_d", "coupling", "s2", "degenerate", "dipolar", "d_xz", "b0", "gamma_a", "gamma_d"}
_RATE_KEYS = {"preset", "gamma0", "gin_up", "gout_up", "gin_down", "gout_down", "gamma_t1", "gamma_ff"}
_PROTOCOL_KEYS = {
    "cycles", "schedule", "initial", "sample_points", "trace_cycles", "window", "rates", "fidelity", "segments",
}
_PULSE_KEYS = {"type", "mode", "fidelity"}
_WINDOW_KEYS = {"type", "duration", "rates"}
_OUTPUT_KEYS = {"trajectory", "cycles", "summary"}
_SWEEP_KEYS = {"b0", "d_xz", "d_xz_log", "gamma_e", "gamma_n", "coupling"}

DEFAULT_OUTPUT = {"trajectory": "trajectory.csv", "cycles": "cycles.csv", "summary": "summary.txt"}


@dataclass(frozen=True)
class SweepConfig:
    b0: np.ndarray
    d_xz: np.ndarray
    gamma_e: float
    gamma_n: float
    coupling: float


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``initial`` is ``BOTH``, a label or a vector."""

    system: SpinSystemSpec | None = None
    rates: dict = field(default_factory=dict)
    protocol: ProtocolSpec | None = None
    initial: object = BOTH
    output: dict = field(default_factory=lambda: dict(DEFAULT_OUTPUT))
    sweep: SweepConfig | None = None


def _unknown(table: dict, allowed: set, path: str):
    extra = sorted(set(table) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) {', '.join(extra)}", f"{path}.{extra[0]}" if path else extra[0])


def _table(doc, key, path):
    value = doc.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError("expected a table", path)
    return value


def _number(table, key, path, *, required=True, default=None, positive=False, nonneg=False, integer=False):
    full = f"{path}.{key}"
    if key not in table:
        if required:
            raise ConfigError("missing required value", full)
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", full)
    if integer and int(value) != value:
        raise ConfigError(f"expected an integer, got {value!r}", full)
    if not np.isfinite(value):
        raise ConfigError("must be finite", full)
    if positive and value <= 0:
        raise ConfigError(f"must be > 0, got {value!r}", full)
    if nonneg and value < 0:
        raise ConfigError(f"must be >= 0, got {value!r}", full)
    return int(value) if integer else float(value)


def _parse_system(t: dict) -> SpinSystemSpec:
    path = "system"
    _unknown(t, _SYSTEM_KEYS, path)
    if "kind" not in t:
        raise ConfigError("missing required value", "system.kind")
    try:
        kind = SystemKind(t["kind"])
    except ValueError:
        kinds = ", ".join(k.value for k in SystemKind)
        raise ConfigError(f"unknown kind {t['kind']!r}; choose from {kinds}", "system.kind") from None
    explicit = {"eps_a", "eps_d"} & set(t)
    derived = {"b0", "gamma_a", "gamma_d"} & set(t)
    if explicit and derived:
        raise ConfigError(
            f"explicit splittings ({', '.join(sorted(explicit))}) and field-derived splittings "
            f"({', '.join(sorted(derived))}) are mutually exclusive",
            "system",
        )
    if derived:
        b0 = _number(t, "b0", path)
        eps_a = b0 * _number(t, "gamma_a", path)
        eps_d = b0 * _number(t, "gamma_d", path)
    else:
        eps_a = _number(t, "eps_a", path)
        eps_d = _number(t, "eps_d", path)
    if "s2" in t:
        if "coupling" in t:
            raise ConfigError("coupling and s2 are mutually exclusive", "system.s2")
        s2 = _number(t, "s2", path, nonneg=True)
        try:
            coupling = SpinSystemSpec.from_hybridization(kind, s2, eps_a, eps_d).coupling
        except ValueError as exc:
            raise ConfigError(str(exc), "system.s2") from exc
    else:
        coupling = _number(t, "coupling", path, required=False, default=0.0)
    if "dipolar" in t and "d_xz" in t:
        raise ConfigError("give either dipolar or d_xz, not both", "system.d_xz")
    if "dipolar" in t:
        dip = np.asarray(t["dipolar"], dtype=float)
        if dip.shape != (3, 3):
            raise ConfigError("dipolar must be a 3x3 array", "system.dipolar")
    else:
        dip = dipolar_xz(_number(t, "d_xz", path, required=False, default=0.0))
    degenerate = t.get("degenerate", False)
    if not isinstance(degenerate, bool):
        raise ConfigError("expected true or false", "system.degenerate")
    try:
        return SpinSystemSpec(kind, eps_a, eps_d, coupling, dip, degenerate)
    except ValueError as exc:
        raise ConfigError(str(exc), "system") from exc


def _parse_rates(t: dict) -> dict:
    out = {}
    for label, table in t.items():
        path = f"rates.{label}"
        if not isinstance(table, dict):
            raise ConfigError("expected a table", path)
        _unknown(table, _RATE_KEYS, path)
        name = table.get("preset", "custom")
        if name not in PRESET_NAMES:
            raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}", f"{path}.preset")
        gamma0 = _number(table, "gamma0", path, required=False, default=1.0, nonneg=True)
        values = {
            k: _number(table, k, path, nonneg=True)
            for k in ("gin_up", "gout_up", "gin_down", "gout_down")
            if k in table
        }
        if name in ("fig2_T0", "fig2_f003", "rt_window") and values:
            raise ConfigError(f"preset {name!r} has fixed rates; use preset 'custom' instead", path)
        try:
            rs = preset(name, gamma0=gamma0, values=values or None).rates
        except ConfigError as exc:
            raise ConfigError(str(exc), path) from None
        relax = {k: _number(table, k, path, nonneg=True) for k in ("gamma_t1", "gamma_ff") if k in table}
        if relax:
            rs = RateSet(**{**rs.as_dict(), **relax})
        out[label] = rs
    return out


def _parse_segments(items, rates) -> tuple:
    if not isinstance(items, list) or not items:
        raise ConfigError("expected a non-empty array of tables", "protocol.segments")
    segs = []
    for i, seg in enumerate(items):
        path = f"protocol.segments[{i}]"
        if not isinstance(seg, dict):
            raise ConfigError("expected a table", path)
        kind = seg.get("type")
        if kind == "pulse":
            _unknown(seg, _PULSE_KEYS, path)
            mode = seg.get("mode")
            if mode not in (None, "up", "down"):
                raise ConfigError(f"mode must be 'up' or 'down', got {mode!r}", f"{path}.mode")
            fid = _number(seg, "fidelity", path, required=False, default=1.0)
            if not 0 <= fid <= 1:
                raise ConfigError("fidelity must lie in [0, 1]", f"{path}.fidelity")
            segs.append(Pulse(mode, fid))
        elif kind == "window":
            _unknown(seg, _WINDOW_KEYS, path)
            label = seg.get("rates")
            if label not in rates:
                raise ConfigError(f"unknown rate label {label!r}", f"{path}.rates")
            segs.append(Window(_number(seg, "duration", path, positive=True), label))
        else:
            raise ConfigError(f"type must be 'pulse' or 'window', got {kind!r}", f"{path}.type")
    return tuple(segs)


def _parse_initial(value):
    if isinstance(value, str):
        return value
    if isinstance(value, list):
        rho = np.asarray(value, dtype=float)
        if rho.shape != (6,) or rho.min() < 0 or abs(rho.sum() - 1) > 1e-9:
            raise ConfigError("initial vector must hold 6 non-negative populations summing to 1", "protocol.initial")
        return rho
    raise ConfigError("initial must be a state label, 'both' or a 6-element array", "protocol.initial")


def _parse_protocol(t: dict, rates: dict):
    path = "protocol"
    _unknown(t, _PROTOCOL_KEYS, path)
    cycles = _number(t, "cycles", path, integer=True)
    if cycles < 1:
        raise ConfigError(f"must be >= 1, got {cycles}", "protocol.cycles")
    try:
        schedule = Schedule(t.get("schedule", "fixed_down"))
    except ValueError:
        raise ConfigError(
            f"unknown schedule {t.get('schedule')!r}; choose from {', '.join(s.value for s in Schedule)}",
            "protocol.schedule",
        ) from None
    if "segments" in t:
        if "window" in t or "rates" in t:
            raise ConfigError("window/rates shortcut and explicit segments are mutually exclusive", "protocol")
        segments = _parse_segments(t["segments"], rates)
    else:
        label = t.get("rates", "read_load")
        if label not in rates:
            raise ConfigError(f"unknown rate label {label!r}", "protocol.rates")
        fid = _number(t, "fidelity", path, required=False, default=1.0)
        if not 0 <= fid <= 1:
            raise ConfigError("fidelity must lie in [0, 1]", "protocol.fidelity")
        segments = (Pulse(None, fid), Window(_number(t, "window", path, positive=True), label))
    initial = _parse_initial(t.get("initial", BOTH))
    sample_points = _number(t, "sample_points", path, required=False, default=2, integer=True)
    if sample_points < 2:
        raise ConfigError("must be >= 2", "protocol.sample_points")
    trace = _number(t, "trace_cycles", path, required=False, default=None, integer=True, nonneg=True)
    placeholder = np.eye(6)[2] if isinstance(initial, str) and initial == BOTH else initial
    spec = ProtocolSpec(segments, cycles, schedule, placeholder, sample_points, trace)
    return spec, initial


def _axis(t, key, path, log=False):
    full = f"{path}.{key}"
    value = t.get(key)
    if not (isinstance(value, list) and len(value) == 3):
        raise ConfigError("expected [start, stop, num]", full)
    start, stop, num = value
    if not float(num).is_integer() or num < 1:
        raise ConfigError("num must be a positive integer", full)
    if log:
        if start <= 0 or stop <= 0:
            raise ConfigError("log axis needs positive bounds", full)
        return np.geomspace(start, stop, int(num))
    return np.linspace(start, stop, int(num))


def _parse_sweep(t: dict) -> SweepConfig:
    path = "sweep"
    _unknown(t, _SWEEP_KEYS, path)
    log = t.get("d_xz_log", True)
    if not isinstance(log, bool):
        raise ConfigError("expected true or false", "sweep.d_xz_log")
    return SweepConfig(
        b0=_axis(t, "b0", path),
        d_xz=_axis(t, "d_xz", path, log=log),
        gamma_e=_number(t, "gamma_e", path),
        gamma_n=_number(t, "gamma_n", path),
        coupling=_number(t, "coupling", path),
    )


def parse_config(text: str, overrides=()) -> RunConfig:
    """Parse and validate TOML ``text``; ``overrides`` are ``key.path=value`` strings."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    apply_overrides(doc, overrides)
    if not doc:
        raise ConfigError("empty configuration; expected [system], [rates.<label>] and [protocol], or [sweep]")
    _unknown(doc, _SECTIONS, "")
    sweep = _parse_sweep(_table(doc, "sweep", "sweep")) if "sweep" in doc else None
    output_t = _table(doc, "output", "output")
    _unknown(output_t, _OUTPUT_KEYS, "output")
    output = {**DEFAULT_OUTPUT, **output_t}
    for k, v in output.items():
        if not isinstance(v, str) or not v:
            raise ConfigError("expected a file name", f"output.{k}")
    if sweep is not None and not ({"system", "rates", "protocol"} & set(doc)):
        return RunConfig(output=output, sweep=sweep)
    missing = [s for s in ("system", "rates", "protocol") if s not in doc]
    if missing:
        raise ConfigError(f"missing required section(s): {', '.join('[' + m + ']' for m in missing)}")
    system = _parse_system(_table(doc, "system", "system"))
    rates = _parse_rates(_table(doc, "rates", "rates"))
    if not rates:
        raise ConfigError("at least one [rates.<label>] table is required", "rates")
    protocol, initial = _parse_protocol(_table(doc, "protocol", "protocol"), rates)
    return RunConfig(system, rates, protocol, initial, output, sweep)


def load_config(path, overrides=()) -> RunConfig:
    with open(path, "rb") as fh:
        text = fh.read().decode("utf-8")
    return parse_config(text, overrides)


def _parse_value(raw: str):
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw


def apply_overrides(doc: dict, overrides) -> dict:
    """Set dotted-path keys in ``doc`` in place, e.g. ``protocol.cycles=10``.

    Values are read as TOML literals, falling back to plain strings.
    """
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key.path=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        if not all(parts):
            raise ConfigError(f"bad override path {key!r}")
        node = doc
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError("cannot descend into a non-table value", key)
        node[parts[-1]] = _parse_value(raw.strip())
    return doc
