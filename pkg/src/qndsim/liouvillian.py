"""Generators of the classical master equation d(rho)/dt = L rho.

States are ordered as the four two-particle eigenstates followed by the two
one-particle states, e.g. ``(↑A↑D, ~↑A↓D, ~↓A↑D, ↓A↓D, ↑D, ↓D)``. ``L[i, j]``
is the rate from state ``j`` to state ``i``; every column sums to zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .reservoir import RateSet
from .spin_system import (
    DEGENERATE_LABELS_2P,
    EE_LABELS_1P,
    EE_LABELS_2P,
    EN_LABELS_1P,
    EN_LABELS_2P,
    Channel,
    EigenBasis,
    SystemKind,
    TunnelingMatrix,
    transition_amplitudes,
)

__all__ = [
    "EE_BASIS",
    "EN_BASIS",
    "DEGENERATE_BASIS",
    "RT_BASIS",
    "MIRROR",
    "UP_INDICES",
    "Liouvillian",
    "assemble_ee",
    "assemble_en",
    "assemble_aniso",
    "assemble_from_matrix",
    "assemble_rt",
    "generator_for",
    "validate_state",
    "basis_state",
    "mirror_state",
]

EE_BASIS = EE_LABELS_2P + EE_LABELS_1P
EN_BASIS = EN_LABELS_2P + EN_LABELS_1P
DEGENERATE_BASIS = DEGENERATE_LABELS_2P + EE_LABELS_1P
RT_BASIS = ("~↓⇑", "↓⇓", "⇑", "⇓")

#: index permutation that exchanges up and down for every particle
MIRROR = np.array([3, 2, 1, 0, 5, 4])
#: states whose data (or nuclear) spin is up
UP_INDICES = np.array([0, 2, 4])

_STATE_TOL = 1e-9


@dataclass(frozen=True)
class Liouvillian:
    """Dense generator over a labelled state basis (rates in 1/s)."""

    basis: tuple
    l: np.ndarray

    def __post_init__(self):
        l = np.array(self.l, dtype=float)
        n = len(self.basis)
        if l.shape != (n, n):
            raise ValueError(f"generator shape {l.shape} does not match basis size {n}")
        if not np.all(np.isfinite(l)):
            raise ValueError("generator has non-finite entries")
        scale = max(1.0, float(np.abs(l).max()))
        if np.abs(l.sum(axis=0)).max() > 1e-12 * scale:
            raise ValueError("generator columns must sum to zero")
        off = l - np.diag(np.diag(l))
        if off.min() < 0:
            raise ValueError("off-diagonal rates must be non-negative")
        l.setflags(write=False)
        object.__setattr__(self, "basis", tuple(self.basis))
        object.__setattr__(self, "l", l)

    @property
    def size(self) -> int:
        return len(self.basis)

    def scaled(self, alpha: float) -> "Liouvillian":
        return Liouvillian(self.basis, alpha * self.l)

    def mirrored(self) -> "Liouvillian":
        """Generator with the up/down roles of every particle exchanged."""
        p = MIRROR
        return Liouvillian(self.basis, self.l[np.ix_(p, p)])

    def __add__(self, other: "Liouvillian") -> "Liouvillian":
        if self.basis != other.basis:
            raise ValueError("cannot add generators over different bases")
        return Liouvillian(self.basis, self.l + other.l)


class _Builder:
    def __init__(self, n=6):
        self.l = np.zeros((n, n))

    def rate(self, src, dst, r):
        if r:
            self.l[dst, src] += r
            self.l[src, src] -= r


def _check_sc(s, c):
    if abs(s * s + c * c - 1) > 1e-12:
        raise ValueError(f"s**2 + c**2 must equal 1, got {s * s + c * c!r}")
    return s * s, c * c


def assemble_ee(s: float, c: float, rates: RateSet, basis: tuple = EE_BASIS) -> Liouvillian:
    """Exchange-coupled ancilla and data electrons.

    The entries with a blank or truncated coefficient in the reference matrices
    are fixed by requiring zero column sums.
    """
    if rates.gamma_ff:
        raise ValueError("exchange-coupled electrons have no flip-flop channel")
    s2, c2 = _check_sc(s, c)
    b = _Builder()
    r = rates
    # up electron tunnels out, down electron tunnels in
    b.rate(0, 4, r.gout_up)
    b.rate(1, 5, r.gout_up * c2)
    b.rate(2, 5, r.gout_up * s2)
    b.rate(4, 1, r.gin_down * s2)
    b.rate(4, 2, r.gin_down * c2)
    b.rate(5, 3, r.gin_down)
    # thermally activated counterparts
    b.rate(4, 0, r.gin_up)
    b.rate(5, 1, r.gin_up * c2)
    b.rate(5, 2, r.gin_up * s2)
    b.rate(1, 4, r.gout_down * s2)
    b.rate(2, 4, r.gout_down * c2)
    b.rate(3, 5, r.gout_down)
    # T1 relaxation of an up electron
    for src, dst in ((0, 1), (0, 2), (1, 3), (2, 3), (4, 5)):
        b.rate(src, dst, r.gamma_t1)
    return Liouvillian(basis, b.l)


def assemble_en(s: float, c: float, rates: RateSet) -> Liouvillian:
    """Nucleus coupled to a donor electron by isotropic hyperfine interaction."""
    s2, c2 = _check_sc(s, c)
    b = _Builder()
    r = rates
    b.rate(0, 4, r.gout_up)
    b.rate(1, 4, r.gout_up * s2)
    b.rate(1, 5, r.gout_up * c2)
    b.rate(4, 2, r.gin_down * c2)
    b.rate(5, 2, r.gin_down * s2)
    b.rate(5, 3, r.gin_down)
    b.rate(4, 0, r.gin_up)
    b.rate(4, 1, r.gin_up * s2)
    b.rate(5, 1, r.gin_up * c2)
    b.rate(2, 4, r.gout_down * c2)
    b.rate(2, 5, r.gout_down * s2)
    b.rate(3, 5, r.gout_down)
    b.rate(0, 1, r.gamma_t1 * s2)
    b.rate(0, 2, r.gamma_t1 * c2)
    b.rate(1, 3, r.gamma_t1 * c2)
    b.rate(2, 3, r.gamma_t1 * s2)
    b.rate(1, 2, r.gamma_ff)
    return Liouvillian(EN_BASIS, b.l)


def assemble_from_matrix(tm: TunnelingMatrix, rates: RateSet) -> Liouvillian:
    """Tunnelling-only generator built transition by transition.

    Each allowed pair ``(n, k)`` contributes an out rate ``k -> n`` and an in
    rate ``n -> k`` equal to the base rate of its channel times ``m[n, k]``.
    Relaxation channels are not included.
    """
    b = _Builder()
    base = {
        Channel.UP: (rates.gin_up, rates.gout_up),
        Channel.DOWN: (rates.gin_down, rates.gout_down),
    }
    for n in range(2):
        for k in range(4):
            ch = int(tm.channel[n, k])
            if ch == Channel.FORBIDDEN:
                continue
            gin, gout = base[Channel(ch)]
            b.rate(k, 4 + n, gout * tm.m[n, k])
            b.rate(4 + n, k, gin * tm.m[n, k])
    return Liouvillian(tuple(tm.labels_2p) + tuple(tm.labels_1p), b.l)


def assemble_aniso(m: TunnelingMatrix, rates: RateSet) -> Liouvillian:
    """Nucleus coupled to an electron by anisotropic hyperfine interaction.

    Only tunnelling processes are modelled for this kind, so ``rates`` must
    not carry relaxation rates.
    """
    if rates.gamma_t1 or rates.gamma_ff:
        raise ValueError("relaxation channels are not defined for the anisotropic generator")
    return assemble_from_matrix(m, rates)


def assemble_rt(s: float, gamma_rt: float):
    """Resonant-tunnelling rate equations.

    Returns the 4x4 generator over ``RT_BASIS`` and the effective two-state
    nuclear generator obtained by assuming the loaded and unloaded populations
    equilibrate instantly.
    """
    if gamma_rt < 0:
        raise ValueError("gamma_rt must be non-negative")
    if not -1 <= s <= 1:
        raise ValueError("s must lie in [-1, 1]")
    s2 = s * s
    c2 = 1 - s2
    g = gamma_rt
    full = np.array(
        [
            [-g, 0, g * c2, g * s2],
            [0, -g, 0, g],
            [g * c2, 0, -g * c2, 0],
            [g * s2, g, 0, -g * (1 + s2)],
        ]
    )
    eff = g * s2 * np.array([[-1.0, 1.0], [1.0, -1.0]])
    return full, eff


def generator_for(basis: EigenBasis, rates: RateSet) -> Liouvillian:
    """Pick the assembler matching the system kind of ``basis``."""
    if basis.degenerate:
        r = 1 / np.sqrt(2)
        return assemble_ee(r, r, rates, DEGENERATE_BASIS)
    if basis.kind in (SystemKind.ISING_EE, SystemKind.HEISENBERG_EE):
        s, c = basis.sc
        return assemble_ee(s, c, rates)
    if basis.kind is SystemKind.HYPERFINE_EN:
        s, c = basis.sc
        return assemble_en(s, c, rates)
    return assemble_aniso(transition_amplitudes(basis), rates)


def validate_state(rho, n: int = 6, tol: float = _STATE_TOL) -> np.ndarray:
    """Return ``rho`` as a float array after checking it is a distribution."""
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (n,):
        raise ValueError(f"state vector must have shape ({n},), got {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise ValueError("state vector has non-finite entries")
    if rho.min() < -tol:
        raise ValueError(f"state vector has negative population {rho.min():.3e}")
    if abs(rho.sum() - 1) > tol:
        raise ValueError(f"state vector sums to {rho.sum():.12g}, not 1")
    return rho


def basis_state(basis: tuple, label: str) -> np.ndarray:
    """Unit population on ``label``; tilde markers may be omitted."""
    stripped = [b.lstrip("~") for b in basis]
    key = label.lstrip("~")
    if key not in stripped:
        raise KeyError(f"unknown state {label!r}; basis is {basis}")
    rho = np.zeros(len(basis))
    rho[stripped.index(key)] = 1.0
    return rho


def mirror_state(rho) -> np.ndarray:
    return np.asarray(rho)[MIRROR]
