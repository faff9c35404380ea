"""Lead occupation, golden-rule tunnel rates and named rate presets.

Energies are frequencies (Hz), temperatures kelvin, rates 1/s.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np
from scipy.special import expit

from .errors import ConfigError
from .spin_system import Channel, ChemicalPotentials, TunnelingMatrix

__all__ = [
    "K_B",
    "RateSet",
    "LeadSpec",
    "TransitionRates",
    "Preset",
    "PRESET_NAMES",
    "fermi_occupation",
    "golden_rule_rates",
    "rates_from_lead",
    "symmetric_rates",
    "preset",
    "describe_preset",
]

#: Boltzmann constant in Hz/K
K_B = 2.083661912e10


@dataclass(frozen=True)
class RateSet:
    """Spin-resolved tunnel rates plus optional relaxation channels (1/s)."""

    gin_up: float = 0.0
    gout_up: float = 0.0
    gin_down: float = 0.0
    gout_down: float = 0.0
    gamma_t1: float = 0.0
    gamma_ff: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = float(getattr(self, f.name))
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{f.name} must be a finite non-negative rate, got {v!r}")
            object.__setattr__(self, f.name, v)

    def scaled(self, alpha: float) -> "RateSet":
        """Every rate multiplied by ``alpha``."""
        return RateSet(**{f.name: alpha * getattr(self, f.name) for f in fields(self)})

    def mirrored(self) -> "RateSet":
        """Rates with the up and down spin labels exchanged.

        Relaxation channels have a fixed direction, so mirroring is only
        defined when both are zero.
        """
        if self.gamma_t1 or self.gamma_ff:
            raise ValueError("cannot mirror a rate set with directional relaxation rates")
        return RateSet(self.gin_down, self.gout_down, self.gin_up, self.gout_up)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class LeadSpec:
    """Reservoir seen by the ancilla: bare tunnel rate, chemical potential, temperature."""

    gamma0: float
    mu_lead: float = 0.0
    temperature: float = 0.0

    def __post_init__(self):
        if self.gamma0 < 0:
            raise ValueError("gamma0 must be non-negative")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")


def fermi_occupation(energy, lead: LeadSpec):
    """Fraction of occupied lead states at ``energy``.

    At zero temperature this is an exact step: 1 below the lead chemical
    potential, 0 above it and 1/2 at equality.
    """
    e = np.asarray(energy, dtype=float)
    if lead.temperature == 0:
        out = np.where(e < lead.mu_lead, 1.0, np.where(e > lead.mu_lead, 0.0, 0.5))
    else:
        out = expit(-(e - lead.mu_lead) / (K_B * lead.temperature))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class TransitionRates:
    """Per-transition in/out rates indexed ``[1P state, 2P state]``."""

    gin: np.ndarray
    gout: np.ndarray


def _occupations(mus: ChemicalPotentials, lead: LeadSpec, per_transition: bool):
    allowed = mus.channel != Channel.FORBIDDEN
    f = np.zeros_like(mus.mu)
    if per_transition:
        f[allowed] = fermi_occupation(mus.mu[allowed], lead)
        return f
    for ch in (Channel.UP, Channel.DOWN):
        sel = mus.channel == ch
        if sel.any():
            f[sel] = fermi_occupation(mus.group_mean(ch), lead)
    return f


def golden_rule_rates(
    m: TunnelingMatrix, mus: ChemicalPotentials, lead: LeadSpec, per_transition: bool = False
) -> TransitionRates:
    """Golden-rule in/out rates for every 1P <-> 2P transition.

    The occupation is evaluated once per channel group at the group's mean
    chemical potential unless ``per_transition`` is set.
    """
    f = _occupations(mus, lead, per_transition)
    gin = lead.gamma0 * m.m * f
    gout = lead.gamma0 * m.m * (1.0 - f)
    return TransitionRates(gin, gout)


def rates_from_lead(
    mus: ChemicalPotentials, lead: LeadSpec, gamma_t1: float = 0.0, gamma_ff: float = 0.0
) -> RateSet:
    """Collapse a lead tuning into the four spin-resolved base rates."""
    f_up = fermi_occupation(mus.group_mean(Channel.UP), lead)
    f_down = fermi_occupation(mus.group_mean(Channel.DOWN), lead)
    g0 = lead.gamma0
    return RateSet(g0 * f_up, g0 * (1 - f_up), g0 * f_down, g0 * (1 - f_down), gamma_t1, gamma_ff)


def symmetric_rates(gamma0: float, f: float, **relax) -> RateSet:
    """Rates for a lead centred between the two channel groups with occupation ``f``."""
    if not 0 <= f <= 1:
        raise ValueError("f must lie in [0, 1]")
    return RateSet(
        gin_up=gamma0 * f,
        gout_up=gamma0 * (1 - f),
        gin_down=gamma0 * (1 - f),
        gout_down=gamma0 * f,
        **relax,
    )


@dataclass(frozen=True)
class Preset:
    """A named rate scenario; ``windows`` maps window names to durations (s)."""

    name: str
    description: str
    rates: RateSet
    windows: dict = field(default_factory=dict)


PRESET_NAMES = ("fig2_T0", "fig2_f003", "fig3a", "fig4_ff", "rt_window", "custom")

_RATE_KEYS = ("gin_up", "gout_up", "gin_down", "gout_down")

_DESCRIPTIONS = {
    "fig2_T0": "exchange-coupled electrons, zero temperature: only down-in and up-out tunnelling at gamma0",
    "fig2_f003": "exchange-coupled electrons, symmetric tuning with lead occupation f=0.03",
    "fig3a": "experimentally calibrated spin-dependent read/load rates with T1 = 1/s (values must be supplied)",
    "fig4_ff": "read/load rates of fig3a plus electron-nuclear flip-flop relaxation 53.3e-3/s",
    "rt_window": "resonant-tunnelling stage rates, with 1 ms read/load, 0.7 ms RT and 0.3 ms load windows",
    "custom": "four rates and optional relaxation given explicitly",
}

RT_RATES = RateSet(gin_up=140.0, gout_up=5.6e4, gin_down=2.8e4, gout_down=2.8e4, gamma_ff=53.3e-3)
RT_WINDOWS = {"read_load": 1e-3, "rt": 0.7e-3, "load": 0.3e-3}
FLIP_FLOP_RATE = 53.3e-3


def _explicit(name, values, **defaults):
    if values is None:
        raise ConfigError(f"preset {name!r} needs explicit rates {', '.join(_RATE_KEYS)}")
    missing = [k for k in _RATE_KEYS if k not in values]
    if missing:
        raise ConfigError(f"preset {name!r} is missing {', '.join(missing)}")
    merged = dict(defaults)
    merged.update(values)
    try:
        return RateSet(**merged)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"preset {name!r}: {exc}") from exc


def preset(name: str, gamma0: float = 1.0, values: dict | None = None) -> Preset:
    """Look up a named scenario.

    ``gamma0`` scales the idealised exchange presets. ``values`` supplies
    the rates for presets that have no built-in numbers (``fig3a``,
    ``fig4_ff`` and ``custom``).
    """
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    desc = _DESCRIPTIONS[name]
    if name == "fig2_T0":
        return Preset(name, desc, RateSet(gout_up=gamma0, gin_down=gamma0))
    if name == "fig2_f003":
        return Preset(name, desc, symmetric_rates(gamma0, 0.03))
    if name == "fig3a":
        return Preset(name, desc, _explicit(name, values, gamma_t1=1.0))
    if name == "fig4_ff":
        return Preset(name, desc, _explicit(name, values, gamma_ff=FLIP_FLOP_RATE))
    if name == "rt_window":
        return Preset(name, desc, RT_RATES, dict(RT_WINDOWS))
    return Preset(name, desc, _explicit(name, values))



def describe_preset(name: str) -> str:
    """One-line description of a named scenario."""
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    return _DESCRIPTIONS[name]
