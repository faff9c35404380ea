"""Rate-equation simulation of repeated QND readout of a spin qubit via a tunnel-read ancilla."""

from .errors import (
    ConfigError,
    DegenerateLabelingError,
    DegenerateNullSpaceError,
    FitFailure,
    NumericalFailure,
    QNDError,
)
from .spin_system import (
    Channel,
    EigenBasis,
    SpinSystemSpec,
    SystemKind,
    TunnelingMatrix,
    build_hamiltonian,
    chemical_potentials,
    diagonalize,
    eigenbasis,
    transition_amplitudes,
)
from .reservoir import K_B, LeadSpec, RateSet, fermi_occupation, golden_rule_rates, preset
from .liouvillian import Liouvillian, assemble_aniso, assemble_ee, assemble_en, assemble_rt, generator_for
from .protocol import CRMode, ProtocolSpec, Pulse, Schedule, TrajectoryRecord, Window, apply_pulse, propagate, run_qnd, run_rt_protocol
from .analysis import FlipRateFit, fit_flip_rates, stationary_state, sweep_hybridization

__version__ = "0.1.0"
