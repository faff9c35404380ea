"""Ready-made systems and protocols for the standard measurement scenarios."""

from __future__ import annotations

import numpy as np

from .analysis import FlipRateFit, fit_records, map_stationary_state
from .liouvillian import UP_INDICES
from .protocol import ProtocolSpec, Pulse, Schedule, Window, period_map, run_qnd
from .reservoir import RT_RATES, RT_WINDOWS, RateSet
from .spin_system import SpinSystemSpec, SystemKind, dipolar_xz

__all__ = [
    "GAMMA_E",
    "GAMMA_N_P31",
    "GAMMA_N_SI29",
    "FIELD_T",
    "FIG3A_STANDIN",
    "exchange_system",
    "hyperfine_system",
    "anisotropic_system",
    "rt_segments",
    "run_pair",
    "flip_rates",
    "cycle_equilibrium",
]

#: electron gyromagnetic ratio (Hz/T)
GAMMA_E = 27.97e9
#: 31P nuclear gyromagnetic ratio (Hz/T); negative so that eps_n < 0
GAMMA_N_P31 = -17.235e6
#: 29Si nuclear gyromagnetic ratio magnitude (Hz/T); the sign is chosen so
#: that the down-electron doublet becomes degenerate at eps_n = A/2
GAMMA_N_SI29 = 8.458e6
#: static field of the donor scenarios (T)
FIELD_T = 1.77

#: Stand-in read/load rates (1/s). They satisfy the known constraints
#: (down-in twice up-in, 0.82 reinitialisation after 1 ms, equilibrium
#: data-up probability 0.13 under down-conditioned pulses without T1) but are not the
#: calibrated values.
FIG3A_STANDIN = RateSet(gin_up=1.0e4, gout_up=2930.0, gin_down=2.0e4, gout_down=137.0)

#: initial states with the ancilla loaded in its ground state
INITIAL_UP = 2
INITIAL_DOWN = 3


def exchange_system(ratio: float = 0.1, delta_eps: float = 100e6, field: float = FIELD_T) -> SpinSystemSpec:
    """Exchange-coupled electron pair with ``J / delta_eps = ratio``."""
    eps_a = GAMMA_E * field
    return SpinSystemSpec(SystemKind.HEISENBERG_EE, eps_a, eps_a - delta_eps, ratio * delta_eps)


def hyperfine_system(field: float = FIELD_T, hyperfine: float = 117.5e6) -> SpinSystemSpec:
    """31P donor: electron and nucleus with isotropic contact hyperfine."""
    return SpinSystemSpec.from_field(SystemKind.HYPERFINE_EN, field, GAMMA_E, GAMMA_N_P31, hyperfine)


def anisotropic_system(field: float = FIELD_T, d_xz: float = 106.2e3, hyperfine: float = 4.508e6) -> SpinSystemSpec:
    """29Si nucleus with isotropic and xz dipolar hyperfine coupling."""
    return SpinSystemSpec.from_field(
        SystemKind.ANISOTROPIC_EN, field, GAMMA_E, GAMMA_N_SI29, hyperfine, dipolar_xz(d_xz)
    )


def rt_segments(read_label: str = "read_load", rt_label: str = "rt", windows: dict = RT_WINDOWS):
    """Pulse, read/load window, resonant window and reload window."""
    return (
        Pulse(),
        Window(windows["read_load"], read_label),
        Window(windows["rt"], rt_label),
        Window(windows["load"], read_label),
    )


def rt_rates(read_load: RateSet = FIG3A_STANDIN) -> dict:
    """Rate map for the resonant-tunnelling protocol."""
    return {"read_load": read_load, "rt": RT_RATES}


def run_pair(system, rates: dict, segments, cycles: int, schedule, **kw):
    """Run a protocol from the data-up and data-down ground states."""
    out = []
    for initial in (INITIAL_UP, INITIAL_DOWN):
        rho = np.zeros(6)
        rho[initial] = 1.0
        spec = ProtocolSpec(tuple(segments), cycles, Schedule(schedule), rho, **kw)
        out.append(run_qnd(system, rates, spec))
    return tuple(out)


def flip_rates(system, rates: dict, segments, cycles: int, schedule) -> FlipRateFit:
    """Fitted data flip rates for one pulse schedule."""
    up, down = run_pair(system, rates, segments, cycles, schedule, trace_cycles=0)
    return fit_records(up, down)


def cycle_equilibrium(system, rates: dict, segments, schedule) -> float:
    """Steady-state data-up probability at cycle ends, averaged over the schedule period."""
    spec = ProtocolSpec(tuple(segments), 1, Schedule(schedule), np.eye(6)[INITIAL_UP])
    states = map_stationary_state(period_map(system, rates, spec))
    return float(np.mean([s[UP_INDICES].sum() for s in states]))
