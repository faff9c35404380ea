"""Hybridization of a 29Si nucleus under anisotropic hyperfine coupling.

Prints the two selection-rule weights at the reference point and the field
at which the down-electron doublet is most strongly mixed.

Run with ``python demos/anisotropic_map.py``.
"""

import numpy as np

from qndsim import scenarios
from qndsim.analysis import sweep_hybridization
from qndsim.spin_system import eigenbasis, transition_amplitudes

tm = transition_amplitudes(eigenbasis(scenarios.anisotropic_system()))
print(f"B0 = 1.77 T, D_xz = 106.2 kHz: m_down = {tm.m[0, 3]:.3e}, m_up = {tm.m[0, 1]:.3e}")

base = scenarios.anisotropic_system()
b0 = np.linspace(0.05, 2.0, 391)
dxz = np.logspace(3, 6, 4)
res = sweep_hybridization(base, b0, dxz, scenarios.GAMMA_E, scenarios.GAMMA_N_SI29, jobs=2)
print(f"\nexpected peak field A/(2 gamma_n) = {base.coupling / 2 / scenarios.GAMMA_N_SI29:.4f} T")
for j, d in enumerate(dxz):
    k = np.nanargmax(res.m_down[:, j])
    print(f"  D_xz = {d:9.0f} Hz: peak m_down = {res.m_down[k, j]:.3e} at B0 = {b0[k]:.4f} T")
