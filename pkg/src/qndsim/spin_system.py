"""Two-particle spin Hamiltonians, their eigenbases and tunnelling selection rules.

Product basis order is fixed everywhere in the package::

    0: up(ancilla/electron) up(data/nucleus)
    1: up down
    2: down up
    3: down down

i.e. ``index = 2 * ancilla_spin + data_spin`` with 0 = up, 1 = down. One-particle
states (ancilla tunnelled off) are the data spin alone: 0 = up, 1 = down.

All energies are frequencies in Hz.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse.csgraph import connected_components

from .errors import DegenerateLabelingError

__all__ = [
    "SystemKind",
    "Channel",
    "SpinSystemSpec",
    "EigenBasis",
    "TunnelingMatrix",
    "ChemicalPotentials",
    "build_hamiltonian",
    "diagonalize",
    "eigenbasis",
    "transition_amplitudes",
    "chemical_potentials",
    "dipolar_xz",
    "EE_LABELS_2P",
    "EE_LABELS_1P",
    "EN_LABELS_2P",
    "EN_LABELS_1P",
]

EE_LABELS_2P = ("↑A↑D", "~↑A↓D", "~↓A↑D", "↓A↓D")
EE_LABELS_1P = ("↑D", "↓D")
DEGENERATE_LABELS_2P = ("↑A↑D", "S", "T", "↓A↓D")
EN_LABELS_2P = ("~↑⇑", "~↑⇓", "~↓⇑", "~↓⇓")
EN_LABELS_1P = ("⇑", "⇓")

# eigenvector components whose two largest weights agree to within this are unlabelable
_AMBIGUITY = 1e-9


class SystemKind(str, enum.Enum):
    ISING_EE = "ising_ee"
    HEISENBERG_EE = "heisenberg_ee"
    HYPERFINE_EN = "hyperfine_en"
    ANISOTROPIC_EN = "anisotropic_en"

    @property
    def is_en(self) -> bool:
        return self in (SystemKind.HYPERFINE_EN, SystemKind.ANISOTROPIC_EN)

    @property
    def is_isotropic(self) -> bool:
        return self in (SystemKind.HEISENBERG_EE, SystemKind.HYPERFINE_EN)


class Channel(enum.IntEnum):
    """Chemical-potential group of a 1P <-> 2P transition."""

    UP = 0
    DOWN = 1
    FORBIDDEN = -1


def dipolar_xz(d_xz: float) -> np.ndarray:
    """Symmetric dipolar tensor with only the xz/zx components set to ``d_xz``."""
    tensor = np.zeros((3, 3))
    tensor[0, 2] = tensor[2, 0] = d_xz
    return tensor


@dataclass(frozen=True)
class SpinSystemSpec:
    """Physical parameters of the data-ancilla pair.

    For the electron-nuclear kinds ``eps_a`` is the electron splitting and
    ``eps_d`` the nuclear one (negative for a nucleus with negative
    gyromagnetic ratio). ``coupling`` is the Ising, exchange or isotropic
    hyperfine strength depending on ``kind``.

    ``degenerate`` requests the equal-splitting exchange scenario, where the
    antiparallel eigenstates are the singlet and triplet and cannot be
    labelled by a dominant product state.
    """

    kind: SystemKind
    eps_a: float
    eps_d: float
    coupling: float = 0.0
    dipolar: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    degenerate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", SystemKind(self.kind))
        dip = np.array(self.dipolar, dtype=float)
        if dip.shape != (3, 3):
            raise ValueError(f"dipolar must be 3x3, got shape {dip.shape}")
        dip.setflags(write=False)
        object.__setattr__(self, "dipolar", dip)
        for name in ("eps_a", "eps_d", "coupling"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if np.any(dip != 0) and self.kind is not SystemKind.ANISOTROPIC_EN:
            raise ValueError(f"nonzero dipolar tensor is only allowed for {SystemKind.ANISOTROPIC_EN.value}")
        if self.degenerate:
            if self.kind is not SystemKind.HEISENBERG_EE:
                raise ValueError("degenerate mode only applies to heisenberg_ee")
            if self.eps_a != self.eps_d:
                raise ValueError("degenerate mode requires eps_a == eps_d")
        elif self.kind.is_isotropic and self.eps_a == self.eps_d and self.coupling != 0:
            raise ValueError(
                "eps_a == eps_d gives maximally mixed antiparallel states; "
                "pass degenerate=True to model the singlet/triplet case"
            )

    @property
    def delta_eps(self) -> float:
        return self.eps_a - self.eps_d

    @classmethod
    def from_field(cls, kind, b0, gamma_a, gamma_d, coupling=0.0, dipolar=None, **kw):
        """Splittings from gyromagnetic ratios (Hz/T) and a static field ``b0`` (T)."""
        if dipolar is None:
            dipolar = np.zeros((3, 3))
        return cls(kind, gamma_a * b0, gamma_d * b0, coupling, dipolar, **kw)

    @classmethod
    def from_hybridization(cls, kind, s2, eps_a, eps_d):
        """Isotropic system whose antiparallel doublet has mixing weight ``s2``.

        The coupling is chosen so that ``sin(theta)**2 == s2`` with
        ``tan(2 theta) = coupling / (eps_a - eps_d)``.
        """
        kind = SystemKind(kind)
        if not kind.is_isotropic:
            raise ValueError("from_hybridization needs an isotropic coupling kind")
        if not 0.0 <= s2 < 0.5:
            raise ValueError("s2 must lie in [0, 0.5)")
        theta = np.arcsin(np.sqrt(s2))
        coupling = (eps_a - eps_d) * np.tan(2 * theta)
        return cls(kind, eps_a, eps_d, float(coupling))


@dataclass(frozen=True)
class EigenBasis:
    """Labelled eigenstates of the two-particle Hamiltonian.

    ``amplitudes[k]`` holds the coefficients of eigenstate ``k`` (in
    ``labels_2p`` order) on the product basis. ``theta`` is only defined for
    the isotropic coupling kinds and is ``None`` otherwise.
    """

    kind: SystemKind
    labels_2p: tuple
    energies_2p: np.ndarray
    amplitudes: np.ndarray
    labels_1p: tuple
    energies_1p: np.ndarray
    theta: float | None
    degenerate: bool = False

    @property
    def s2(self) -> float:
        """Mixing weight sin(theta)**2 of the antiparallel doublet."""
        if self.theta is None:
            raise AttributeError("s2 is only defined for isotropic coupling kinds")
        return float(np.sin(self.theta) ** 2)

    @property
    def sc(self) -> tuple[float, float]:
        if self.theta is None:
            raise AttributeError("s, c are only defined for isotropic coupling kinds")
        return float(np.sin(self.theta)), float(np.cos(self.theta))


@dataclass(frozen=True)
class TunnelingMatrix:
    """Selection-rule weights for every (1P, 2P) pair.

    ``m[n, k]`` is |<n| a_up + a_down |k>|^2 for 1P state ``n`` and eigenstate
    ``k``. ``channel[n, k]`` is the chemical-potential group (high energy =
    ``Channel.UP``). ``spin_weights[sigma, n, k]`` = |<n| a_sigma |k>|^2 splits
    the weight by the spin of the tunnelling particle; summed over ``k`` it is
    exactly one for every ``sigma`` and ``n``.
    """

    m: np.ndarray
    channel: np.ndarray
    spin_weights: np.ndarray
    labels_2p: tuple
    labels_1p: tuple

    def completeness(self) -> np.ndarray:
        """Array ``[sigma, n]`` of summed spin-resolved weights (all ones)."""
        return self.spin_weights.sum(axis=2)

    def channel_of(self, n: int, k: int) -> Channel:
        return Channel(int(self.channel[n, k]))


@dataclass(frozen=True)
class ChemicalPotentials:
    """Transition chemical potentials ``mu[n, k]`` (NaN where forbidden)."""

    mu: np.ndarray
    channel: np.ndarray

    @property
    def up(self) -> np.ndarray:
        return np.sort(self.mu[self.channel == Channel.UP])

    @property
    def down(self) -> np.ndarray:
        return np.sort(self.mu[self.channel == Channel.DOWN])

    def group_mean(self, channel: Channel) -> float:
        return float(np.mean(self.mu[self.channel == channel]))


# spin-1/2 operators; the first tensor factor is the ancilla/electron
_SX = np.array([[0, 1], [1, 0]], dtype=complex) / 2
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex) / 2
_SZ = np.array([[1, 0], [0, -1]], dtype=complex) / 2
_I2 = np.eye(2)
_S = [np.kron(op, _I2) for op in (_SX, _SY, _SZ)]
_D = [np.kron(_I2, op) for op in (_SX, _SY, _SZ)]


def build_hamiltonian(spec: SpinSystemSpec) -> np.ndarray:
    """Two-particle spin Hamiltonian (Hz) in the fixed product basis.

    Returned as a real array whenever the imaginary part vanishes, which is
    the case unless the dipolar tensor mixes y with x or z components.
    """
    h = spec.eps_a * _S[2] + spec.eps_d * _D[2]
    if spec.kind is SystemKind.ISING_EE:
        h = h + spec.coupling * (_S[2] @ _D[2])
    else:
        h = h + spec.coupling * sum(_S[i] @ _D[i] for i in range(3))
    if spec.kind is SystemKind.ANISOTROPIC_EN:
        for i in range(3):
            for j in range(3):
                if spec.dipolar[i, j] != 0:
                    h = h + spec.dipolar[i, j] * (_S[i] @ _D[j])
    if np.all(h.imag == 0):
        return np.ascontiguousarray(h.real)
    return h


def _blockwise_eigh(h):
    """eigh on each connected block so structural zeros stay exactly zero."""
    n = h.shape[0]
    pattern = (h != 0).astype(int)
    nblocks, block_of = connected_components(pattern, directed=False)
    energies = np.zeros(n)
    vectors = np.zeros((n, n), dtype=h.dtype)
    col = 0
    for b in range(nblocks):
        idx = np.flatnonzero(block_of == b)
        w, v = np.linalg.eigh(h[np.ix_(idx, idx)])
        for j in range(len(idx)):
            energies[col] = w[j]
            vectors[idx, col] = v[:, j]
            col += 1
    return energies, vectors


def _degenerate_basis(h, spec):
    r = 1 / np.sqrt(2)
    amps = np.array(
        [
            [1, 0, 0, 0],
            [0, r, -r, 0],  # singlet
            [0, r, r, 0],  # triplet T0
            [0, 0, 0, 1],
        ]
    )
    energies = np.einsum("ki,ij,kj->k", amps, h, amps)
    residual = np.abs(h @ amps.T - amps.T * energies).max()
    if residual > 1e-10 * max(1.0, np.abs(h).max()):
        raise DegenerateLabelingError("singlet/triplet are not eigenstates of this Hamiltonian")
    return DEGENERATE_LABELS_2P, energies, amps, np.pi / 4


def diagonalize(h: np.ndarray, spec: SpinSystemSpec) -> EigenBasis:
    """Eigenpairs of ``h`` labelled by their dominant product-basis component.

    Each eigenvector is rephased so its dominant amplitude is real and
    positive. Raises :class:`DegenerateLabelingError` when an eigenvector has
    two equally large components, unless ``spec.degenerate`` selects the
    singlet/triplet labelling.
    """
    h = np.asarray(h)
    if not np.allclose(h, h.conj().T, rtol=0, atol=1e-12 * max(1.0, np.abs(h).max())):
        raise ValueError("Hamiltonian must be Hermitian")
    kind = spec.kind
    labels_1p = EN_LABELS_1P if kind.is_en else EE_LABELS_1P
    energies_1p = np.array([spec.eps_d / 2, -spec.eps_d / 2])

    if spec.degenerate:
        labels, energies, amps, theta = _degenerate_basis(h, spec)
        return EigenBasis(kind, labels, energies, amps, labels_1p, energies_1p, theta, True)

    w, v = _blockwise_eigh(h)
    weights = np.abs(v) ** 2  # [component, eigenvector]
    rows, cols = linear_sum_assignment(-weights.T)
    slot_of = np.empty(4, dtype=int)
    slot_of[rows] = cols
    for k in range(4):
        top = np.sort(weights[:, k])[::-1]
        if top[0] == 0 or top[1] / top[0] > 1 - _AMBIGUITY:
            raise DegenerateLabelingError(
                f"eigenvector {k} (E={w[k]:.6g} Hz) has no dominant product component "
                f"(weights {np.round(weights[:, k], 12).tolist()})"
            )

    amps = np.zeros((4, 4), dtype=v.dtype)
    energies = np.zeros(4)
    for k in range(4):
        slot = slot_of[k]
        vec = v[:, k]
        phase = vec[slot] / abs(vec[slot])
        amps[slot] = vec / phase
        energies[slot] = w[k]
    if np.iscomplexobj(amps) and np.all(amps.imag == 0):
        amps = amps.real

    if kind is SystemKind.ISING_EE:
        theta = 0.0
    elif kind.is_isotropic:
        theta = 0.5 * np.arctan(spec.coupling / spec.delta_eps)
    else:
        theta = None
    labels = EN_LABELS_2P if kind.is_en else EE_LABELS_2P
    return EigenBasis(kind, labels, energies, amps, labels_1p, energies_1p, theta)


def eigenbasis(spec: SpinSystemSpec) -> EigenBasis:
    """Shortcut for ``diagonalize(build_hamiltonian(spec), spec)``."""
    return diagonalize(build_hamiltonian(spec), spec)


def transition_amplitudes(basis: EigenBasis) -> TunnelingMatrix:
    """Selection-rule matrix for tunnelling between 1P and 2P eigenstates.

    The amplitude for annihilating the ancilla particle with spin ``sigma``
    from eigenstate ``k`` into 1P state ``n`` is the eigenstate's coefficient
    on the product state ``|sigma n>``. The two spin amplitudes are summed
    before squaring.

    The channel of each allowed pair is its energy group: transitions whose
    chemical potential lies above the manifold offset belong to the high
    (``UP``) group, the rest to ``DOWN``.
    """
    amps = basis.amplitudes
    # a[sigma, n, k] = <sigma n | k>
    a = np.empty((2, 2, 4), dtype=amps.dtype)
    for sigma in range(2):
        for n in range(2):
            a[sigma, n, :] = amps[:, 2 * sigma + n]
    m = np.abs(a[0] + a[1]) ** 2
    spin_weights = np.abs(a) ** 2
    mu = basis.energies_2p[None, :] - basis.energies_1p[:, None]
    channel = np.where(mu > 0, Channel.UP, Channel.DOWN).astype(int)
    channel[m == 0] = Channel.FORBIDDEN
    return TunnelingMatrix(m, channel, spin_weights, basis.labels_2p, basis.labels_1p)


def chemical_potentials(basis: EigenBasis, offset: float = 0.0) -> ChemicalPotentials:
    """Chemical potential of every allowed transition.

    ``offset`` is the separation between the 2P and 1P manifold centres
    (charging plus on-site energy), which only shifts all values together.
    """
    if offset < 0:
        raise ValueError("offset must be non-negative")
    tm = transition_amplitudes(basis)
    mu = offset + basis.energies_2p[None, :] - basis.energies_1p[:, None]
    mu = np.where(tm.channel == Channel.FORBIDDEN, np.nan, mu)
    return ChemicalPotentials(mu, tm.channel.copy())
