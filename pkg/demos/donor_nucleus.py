"""Nuclear spin readout through a donor electron.

Compares the isotropic hyperfine case, where only the antiparallel doublet
mixes, with the flip-flop relaxation channel and with resonant tunnelling.
The read/load rates are the stand-in values from ``scenarios.FIG3A_STANDIN``.

Run with ``python demos/donor_nucleus.py``.
"""

import warnings

from qndsim import scenarios
from qndsim.protocol import Pulse, Window
from qndsim.reservoir import RateSet, preset
from qndsim.spin_system import SpinSystemSpec, SystemKind, eigenbasis

warnings.simplefilter("ignore")

system = scenarios.hyperfine_system()
s2 = eigenbasis(system).s2
print(f"31P at 1.77 T: s^2/(1+s^2) = {s2 / (1 + s2):.4e}")

values = {k: v for k, v in scenarios.FIG3A_STANDIN.as_dict().items() if v}
segments = (Pulse(), Window(1e-3, "rl"))
for label, rates in (("no flip-flop", RateSet(**values)), ("flip-flop 53.3e-3/s", preset("fig4_ff", values=values).rates)):
    fit = scenarios.flip_rates(system, {"rl": rates}, segments, 100000, "alternating")
    print(f"{label:22s} gamma_up={fit.gamma_up:.3e} gamma_down={fit.gamma_down:.3e}")

print("\nresonant tunnelling, alternating pulses")
for s2 in (1e-6, 1e-5):
    rt_system = SpinSystemSpec.from_hybridization(SystemKind.HYPERFINE_EN, s2, 49.5e9, -30.5e6)
    fit = scenarios.flip_rates(rt_system, scenarios.rt_rates(), scenarios.rt_segments(), 40000, "alternating")
    duty = 2.8e4 * s2 * 0.35
    print(
        f"  s^2={s2:g}: gamma_up={fit.gamma_up:.3e} gamma_down={fit.gamma_down:.3e} "
        f"sum={fit.gamma_up + fit.gamma_down:.3e} duty estimate={duty:.3e}"
    )
