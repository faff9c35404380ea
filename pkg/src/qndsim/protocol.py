"""Scripted measurement cycles: conditional pulses followed by tunnelling windows.

A cycle is an ordered list of segments. A :class:`Pulse` is an instantaneous
population exchange on the ancilla, conditional on the data spin; a
:class:`Window` evolves the populations for a fixed time under the generator
of a named rate set. Time only advances in windows.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np
from scipy.linalg import expm

from .errors import ConfigError, NumericalFailure
from .liouvillian import UP_INDICES, Liouvillian, basis_state, generator_for, validate_state
from .reservoir import RateSet
from .spin_system import EigenBasis, SpinSystemSpec, eigenbasis

__all__ = [
    "CRMode",
    "Schedule",
    "Pulse",
    "Window",
    "ProtocolSpec",
    "TrajectoryRecord",
    "pulse_matrix",
    "apply_pulse",
    "propagate",
    "p_up",
    "run_qnd",
    "run_rt_protocol",
    "cycle_map",
    "period_map",
]


class CRMode(str, enum.Enum):
    """Which data-spin state the conditional ancilla rotation addresses."""

    UP = "up"
    DOWN = "down"


class Schedule(str, enum.Enum):
    FIXED_UP = "fixed_up"
    FIXED_DOWN = "fixed_down"
    ALTERNATING = "alternating"

    def mode(self, cycle: int) -> CRMode:
        """Pulse condition used in ``cycle`` (0-based).

        The alternating schedule starts with the up-conditioned rotation.
        """
        if self is Schedule.FIXED_UP:
            return CRMode.UP
        if self is Schedule.FIXED_DOWN:
            return CRMode.DOWN
        return CRMode.UP if cycle % 2 == 0 else CRMode.DOWN

    @property
    def period(self) -> int:
        return 2 if self is Schedule.ALTERNATING else 1


# (ancilla-down index, ancilla-up index) of the addressed pair
_PULSE_PAIRS = {CRMode.UP: (2, 0), CRMode.DOWN: (3, 1)}


@dataclass(frozen=True)
class Pulse:
    """Conditional pi pulse; ``mode=None`` follows the protocol schedule."""

    mode: CRMode | None = None
    fidelity: float = 1.0

    def __post_init__(self):
        if self.mode is not None:
            object.__setattr__(self, "mode", CRMode(self.mode))
        if not 0.0 <= self.fidelity <= 1.0:
            raise ValueError("pulse fidelity must lie in [0, 1]")


@dataclass(frozen=True)
class Window:
    """Free evolution for ``duration`` seconds under the rates named ``rate_label``."""

    duration: float
    rate_label: str

    def __post_init__(self):
        if not (np.isfinite(self.duration) and self.duration > 0):
            raise ValueError("window duration must be positive")


Segment = Union[Pulse, Window]


@dataclass(frozen=True)
class ProtocolSpec:
    """A repeated measurement sequence.

    ``initial`` is the state before the first segment of the first cycle,
    either a population vector or a basis label. ``sample_points`` sets the
    number of uniformly spaced samples recorded per window, including both
    window edges; in-window samples are only kept for the first
    ``trace_cycles`` cycles (all cycles when ``None``).
    """

    segments: tuple
    cycles: int
    cr_schedule: Schedule = Schedule.FIXED_DOWN
    initial: object = None
    sample_points: int = 2
    trace_cycles: int | None = None

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise ValueError("protocol needs at least one segment")
        for seg in segs:
            if not isinstance(seg, (Pulse, Window)):
                raise TypeError(f"unsupported segment {seg!r}")
        if not any(isinstance(s, Window) for s in segs):
            raise ValueError("protocol needs at least one window")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "cr_schedule", Schedule(self.cr_schedule))
        if int(self.cycles) != self.cycles or self.cycles < 1:
            raise ValueError("cycles must be a positive integer")
        if self.sample_points < 2:
            raise ValueError("sample_points must be at least 2")
        if self.trace_cycles is not None and self.trace_cycles < 0:
            raise ValueError("trace_cycles must be non-negative")
        if self.initial is None:
            raise ValueError("an initial state is required")

    @classmethod
    def standard(cls, window: float, rate_label: str, cycles: int, schedule, initial, **kw):
        """Pulse followed by a single read/load window."""
        return cls((Pulse(), Window(window, rate_label)), cycles, schedule, initial, **kw)

    @property
    def cycle_duration(self) -> float:
        return float(sum(s.duration for s in self.segments if isinstance(s, Window)))

    @property
    def rate_labels(self) -> tuple:
        return tuple(dict.fromkeys(s.rate_label for s in self.segments if isinstance(s, Window)))


@dataclass(frozen=True)
class TrajectoryRecord:
    """Sampled populations of a protocol run.

    ``times``/``states`` hold the in-window samples; ``cycle_times`` and
    ``cycle_end_states`` hold the state at the end of every cycle, and
    ``p_up_series`` the data-up probability there.
    """

    basis: tuple
    times: np.ndarray
    states: np.ndarray
    cycle_times: np.ndarray
    cycle_end_states: np.ndarray
    p_up_series: np.ndarray
    modes: tuple = field(default=())


def pulse_matrix(mode: CRMode, fidelity: float = 1.0, n: int = 6) -> np.ndarray:
    """Stochastic matrix of a conditional pulse on an ``n``-state basis."""
    a, b = _PULSE_PAIRS[CRMode(mode)]
    p = np.eye(n)
    p[a, a] = p[b, b] = 1 - fidelity
    p[a, b] = p[b, a] = fidelity
    return p


def apply_pulse(rho, mode: CRMode, fidelity: float = 1.0) -> np.ndarray:
    """Mix the populations of the pair addressed by ``mode``.

    The addressed indices are the same for electron-electron and
    electron-nuclear bases: the up-conditioned pulse exchanges states 2 and 0,
    the down-conditioned one states 3 and 1.
    """
    if not 0.0 <= fidelity <= 1.0:
        raise ValueError("pulse fidelity must lie in [0, 1]")
    rho = np.array(rho, dtype=float)
    a, b = _PULSE_PAIRS[CRMode(mode)]
    ra, rb = rho[a], rho[b]
    rho[a] = (1 - fidelity) * ra + fidelity * rb
    rho[b] = fidelity * ra + (1 - fidelity) * rb
    return rho


def _expm(l: np.ndarray, t: float) -> np.ndarray:
    u = expm(l * t)
    if not np.all(np.isfinite(u)):
        raise NumericalFailure(f"propagator over {t:g} s is not finite")
    return u


def propagate(rho, generator: Liouvillian, t: float, samples: int = 2) -> np.ndarray:
    """Populations ``exp(L tau) rho`` at ``samples`` uniform times in ``[0, t]``.

    Returns an array of shape ``(samples, n)``; the first row is ``rho``.
    """
    if t < 0:
        raise ValueError("propagation time must be non-negative")
    if samples < 1:
        raise ValueError("samples must be positive")
    rho = np.asarray(rho, dtype=float)
    out = np.empty((samples, rho.size))
    out[0] = rho
    if samples == 1:
        return out
    step = _expm(generator.l, t / (samples - 1))
    for k in range(1, samples):
        out[k] = step @ out[k - 1]
    if not np.all(np.isfinite(out)):
        raise NumericalFailure("propagated state is not finite")
    return out


def p_up(rho) -> np.ndarray:
    """Probability that the data (or nuclear) spin is up."""
    return np.asarray(rho)[..., UP_INDICES].sum(axis=-1)


def _resolve_basis(system) -> EigenBasis:
    if isinstance(system, EigenBasis):
        return system
    if isinstance(system, SpinSystemSpec):
        return eigenbasis(system)
    raise TypeError("system must be a SpinSystemSpec or EigenBasis")


def _generators(basis: EigenBasis, rates: Mapping[str, RateSet], protocol: ProtocolSpec):
    gens = {}
    for label in protocol.rate_labels:
        if label not in rates:
            raise ConfigError(f"unknown rate label {label!r}; known: {', '.join(sorted(rates))}")
        gens[label] = generator_for(basis, rates[label])
    return gens


def _initial(protocol: ProtocolSpec, basis: tuple) -> np.ndarray:
    if isinstance(protocol.initial, str):
        return basis_state(basis, protocol.initial)
    return validate_state(protocol.initial, len(basis))


def _segment_ops(protocol: ProtocolSpec, cycle: int):
    """(kind, payload, tag) triples for one cycle."""
    ops = []
    for seg in protocol.segments:
        if isinstance(seg, Pulse):
            mode = seg.mode or protocol.cr_schedule.mode(cycle)
            ops.append(("pulse", pulse_matrix(mode, seg.fidelity), mode))
        else:
            ops.append(("window", seg, seg.rate_label))
    return ops


def cycle_map(system, rates: Mapping[str, RateSet], protocol: ProtocolSpec, cycle: int = 0) -> np.ndarray:
    """Stochastic matrix taking the state at a cycle start to its end."""
    basis = _resolve_basis(system)
    gens = _generators(basis, rates, protocol)
    return _cycle_map(protocol, gens, cycle, {})


def _cycle_map(protocol, gens, cycle, cache):
    u = np.eye(6)
    for kind, payload, label in _segment_ops(protocol, cycle):
        if kind == "pulse":
            u = payload @ u
        else:
            key = (label, payload.duration)
            if key not in cache:
                cache[key] = _expm(gens[label].l, payload.duration)
            u = cache[key] @ u
    return u


def period_map(system, rates: Mapping[str, RateSet], protocol: ProtocolSpec) -> list:
    """Cycle maps for one full period of the pulse schedule."""
    basis = _resolve_basis(system)
    gens = _generators(basis, rates, protocol)
    cache = {}
    return [_cycle_map(protocol, gens, k, cache) for k in range(protocol.cr_schedule.period)]


def run_qnd(system, rates: Mapping[str, RateSet], protocol: ProtocolSpec) -> TrajectoryRecord:
    """Execute ``protocol`` and record the population trajectory.

    ``system`` is a :class:`SpinSystemSpec` or an already diagonalised
    :class:`EigenBasis`; ``rates`` maps window rate labels to rate sets.
    """
    basis = _resolve_basis(system)
    gens = _generators(basis, rates, protocol)
    labels = next(iter(gens.values())).basis
    rho = _initial(protocol, labels)
    n_trace = protocol.cycles if protocol.trace_cycles is None else min(protocol.trace_cycles, protocol.cycles)
    period = protocol.cr_schedule.period
    maps_cache: dict = {}
    cycle_maps = [_cycle_map(protocol, gens, k, maps_cache) for k in range(period)]
    step_cache: dict = {}

    times, states = [], []
    ends = np.empty((protocol.cycles, 6))
    modes = []
    t0 = 0.0
    tc = protocol.cycle_duration
    for cycle in range(protocol.cycles):
        ops = _segment_ops(protocol, cycle)
        modes.append(tuple(p for kind, _, p in ops if kind == "pulse"))
        if cycle < n_trace:
            t = t0
            for kind, payload, label in ops:
                if kind == "pulse":
                    rho = payload @ rho
                    continue
                npts = protocol.sample_points
                key = (label, payload.duration)
                if key not in step_cache:
                    step_cache[key] = _expm(gens[label].l, payload.duration / (npts - 1))
                step = step_cache[key]
                seg_times = t + np.linspace(0.0, payload.duration, npts)
                for k in range(npts):
                    if k:
                        rho = step @ rho
                    times.append(seg_times[k])
                    states.append(rho.copy())
                t += payload.duration
        else:
            rho = cycle_maps[cycle % period] @ rho
        if not np.all(np.isfinite(rho)):
            raise NumericalFailure(f"state became non-finite in cycle {cycle + 1}")
        ends[cycle] = rho
        t0 += tc
    cycle_times = tc * np.arange(1, protocol.cycles + 1)
    return TrajectoryRecord(
        basis=labels,
        times=np.array(times),
        states=np.array(states).reshape(-1, 6),
        cycle_times=cycle_times,
        cycle_end_states=ends,
        p_up_series=p_up(ends),
        modes=tuple(modes),
    )


def run_rt_protocol(system, rates: Mapping[str, RateSet], protocol: ProtocolSpec) -> TrajectoryRecord:
    """Execute a protocol that contains at least one resonant-tunnelling window.

    A window is resonant when its down-electron in and out rates are equal.
    """
    resonant = [
        label for label in protocol.rate_labels if label in rates and rates[label].gin_down == rates[label].gout_down
    ]
    if not resonant:
        raise ConfigError("resonant-tunnelling protocol has no window with equal down-electron in/out rates")
    return run_qnd(system, rates, protocol)

