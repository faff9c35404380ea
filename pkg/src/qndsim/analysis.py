"""Flip-rate extraction, stationary states and hybridization sweeps."""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.sparse.csgraph import connected_components

from .errors import DegenerateLabelingError, DegenerateNullSpaceError, FitFailure
from .liouvillian import Liouvillian
from .spin_system import SpinSystemSpec, SystemKind, dipolar_xz, eigenbasis, transition_amplitudes

__all__ = [
    "FlipRateFit",
    "two_state_p_up",
    "fit_flip_rates",
    "fit_records",
    "stationary_state",
    "map_stationary_state",
    "SweepResult",
    "sweep_hybridization",
]

FLAT_TOL = 1e-12


@dataclass(frozen=True)
class FlipRateFit:
    """Fitted flip rates (1/s) of the effective two-state model.

    ``pinned`` names rates fixed to zero because their series showed no
    resolvable change; such a zero is only a lower bound.
    """

    gamma_up: float
    gamma_down: float
    residual_rms: float
    pinned: tuple = field(default=())
    nfev: int = 0

    @property
    def equilibrium_p_up(self) -> float:
        total = self.gamma_up + self.gamma_down
        return self.gamma_down / total if total > 0 else float("nan")


def two_state_p_up(t, gamma_up: float, gamma_down: float, start_up: bool = True):
    """Probability of the up state in the two-state flip model.

    ``gamma_up`` flips up to down and ``gamma_down`` flips down to up.
    """
    t = np.asarray(t, dtype=float)
    total = gamma_up + gamma_down
    if total == 0:
        return np.full_like(t, 1.0 if start_up else 0.0)
    eq = gamma_down / total
    decay = np.exp(-total * t)
    return eq + (1 - eq) * decay if start_up else eq * (1 - decay)


def _check_series(name, series):
    t, p = (np.asarray(a, dtype=float) for a in series)
    if t.ndim != 1 or t.shape != p.shape:
        raise ValueError(f"{name}: times and probabilities must be 1-D arrays of equal length")
    if t.size < 3:
        raise ValueError(f"{name}: at least 3 points are required")
    if np.any(np.diff(t) <= 0):
        raise ValueError(f"{name}: times must be strictly increasing")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(p))):
        raise ValueError(f"{name}: non-finite values")
    return t, p


def _initial_guess(t_up, p_up, t_dn, p_dn, scale):
    eq = 0.5 * (p_up[-1] + p_dn[-1])
    gammas = []
    for t, p, start in ((t_up, p_up, 1.0), (t_dn, p_dn, 0.0)):
        amp = abs(start - eq)
        if amp <= FLAT_TOL:
            continue
        y = np.abs(p - eq) / amp
        ok = (y > 1e-6) & (y < 0.95)
        if ok.sum() >= 2:
            slope = np.polyfit(t[ok], np.log(y[ok]), 1)[0]
            if slope < 0:
                gammas.append(-slope)
    total = np.median(gammas) if gammas else 1.0 / scale
    eq = min(max(eq, 0.0), 1.0)
    return (1 - eq) * total, eq * total


def fit_flip_rates(series_up, series_down, max_nfev: int = 2000) -> FlipRateFit:
    """Joint least-squares fit of the two-state flip model.

    Parameters
    ----------
    series_up, series_down : tuple of arrays
        ``(t, P_up)`` starting from the up and down data state. The model
        assumes ``P_up = 1`` (resp. 0) at ``t = 0``.
    max_nfev : int
        Iteration cap of the optimiser.

    Returns
    -------
    FlipRateFit

    Raises
    ------
    FitFailure
        If the optimiser stops without meeting its tolerances.
    """
    t_up, p_up = _check_series("series_up", series_up)
    t_dn, p_dn = _check_series("series_down", series_down)
    flat_up = np.ptp(np.r_[1.0, p_up]) <= FLAT_TOL
    flat_dn = np.ptp(np.r_[0.0, p_dn]) <= FLAT_TOL
    pinned = tuple(name for name, flat in (("gamma_up", flat_up), ("gamma_down", flat_dn)) if flat)
    for name in pinned:
        warnings.warn(f"{name} series is flat; rate reported as 0 (lower bound)", stacklevel=2)

    scale = max(t_up[-1], t_dn[-1])
    tu, td = t_up / scale, t_dn / scale
    free = [not flat_up, not flat_dn]

    def unpack(x):
        g = np.zeros(2)
        g[free] = x
        return g

    def residuals(x):
        gu, gd = unpack(x)
        return np.r_[two_state_p_up(tu, gu, gd, True) - p_up, two_state_p_up(td, gu, gd, False) - p_dn]

    if not any(free):
        res = residuals(np.zeros(0))
        return FlipRateFit(0.0, 0.0, float(np.sqrt(np.mean(res**2))), pinned, 0)

    guess = np.array(_initial_guess(t_up, p_up, t_dn, p_dn, scale)) * scale
    x0 = np.maximum(guess[free], 1e-8)
    sol = least_squares(
        residuals,
        x0,
        bounds=(0.0, np.inf),
        method="trf",
        x_scale="jac",
        xtol=1e-12,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=max_nfev,
    )
    if sol.status <= 0:
        raise FitFailure(
            f"flip-rate fit did not converge: {sol.message}",
            {"status": sol.status, "nfev": sol.nfev, "x": (unpack(sol.x) / scale).tolist(), "cost": sol.cost},
        )
    gu, gd = unpack(sol.x) / scale
    rms = float(np.sqrt(np.mean(sol.fun**2)))
    return FlipRateFit(float(gu), float(gd), rms, pinned, int(sol.nfev))


def fit_records(record_up, record_down) -> FlipRateFit:
    """Fit the cycle-end series of two trajectory records."""
    return fit_flip_rates(
        (record_up.cycle_times, record_up.p_up_series),
        (record_down.cycle_times, record_down.p_up_series),
    )


def _closed_classes(l: np.ndarray, atol: float):
    """Closed communicating classes of the transition graph of ``l``."""
    n = l.shape[0]
    adj = (l > atol) & ~np.eye(n, dtype=bool)  # adj[i, j]: j -> i
    ncomp, comp = connected_components(adj.T.astype(int), directed=True, connection="strong")
    leaves = np.ones(ncomp, dtype=bool)
    dst, src = np.nonzero(adj)
    for i, j in zip(dst, src):
        if comp[i] != comp[j]:
            leaves[comp[j]] = False
    return [np.flatnonzero(comp == c) for c in range(ncomp) if leaves[c]]


def stationary_state(generator, atol: float = 0.0) -> np.ndarray:
    """Normalised null vector of a generator.

    Parameters
    ----------
    generator : Liouvillian or ndarray
        Rate matrix with zero column sums.
    atol : float
        Off-diagonal entries at or below this value are treated as absent
        when analysing connectivity.

    Raises
    ------
    DegenerateNullSpaceError
        If the generator has more than one closed class of states; the
        error lists them.
    """
    if isinstance(generator, Liouvillian):
        l, labels = generator.l, generator.basis
    else:
        l = np.asarray(generator, dtype=float)
        labels = tuple(str(i) for i in range(l.shape[0]))
    classes = _closed_classes(l, atol)
    if len(classes) > 1:
        blocks = [[labels[i] for i in c] for c in classes]
        raise DegenerateNullSpaceError(
            f"generator has {len(classes)} decoupled closed blocks: {blocks}", blocks
        )
    idx = classes[0]
    sub = l[np.ix_(idx, idx)].copy()
    sub[-1, :] = 1.0
    rhs = np.zeros(len(idx))
    rhs[-1] = 1.0
    x = np.linalg.solve(sub, rhs)
    rho = np.zeros(l.shape[0])
    rho[idx] = np.clip(x, 0.0, None)
    return rho / rho.sum()


def map_stationary_state(maps) -> list:
    """Periodic steady state of a sequence of one-cycle stochastic maps.

    Returns the state at the end of each cycle of the period, in order.
    """
    maps = [np.asarray(u, dtype=float) for u in maps]
    n = maps[0].shape[0]
    period = np.eye(n)
    for u in maps:
        period = u @ period
    rho = stationary_state(period - np.eye(n), atol=1e-15)
    # ``period`` ends on the last map; rotate so entry k is the end of cycle k
    out = [None] * len(maps)
    out[-1] = rho
    state = rho
    for k, u in enumerate(maps[:-1]):
        state = u @ state
        out[k] = state
    return out


@dataclass(frozen=True)
class SweepResult:
    """Selection-rule weights on a (B0, D_xz) grid.

    ``m_down[i, j]`` is the weight between the nuclear-up one-particle state
    and the down-electron, nuclear-down eigenstate; ``m_up`` the one to the
    up-electron, nuclear-down eigenstate. Cells whose eigenstates could not
    be labelled hold NaN.
    """

    b0: np.ndarray
    d_xz: np.ndarray
    m_down: np.ndarray
    m_up: np.ndarray


def _sweep_row(args):
    b0, d_values, coupling, gamma_e, gamma_n = args
    row_down = np.full(len(d_values), np.nan)
    row_up = np.full(len(d_values), np.nan)
    for j, d in enumerate(d_values):
        spec = SpinSystemSpec(SystemKind.ANISOTROPIC_EN, gamma_e * b0, gamma_n * b0, coupling, dipolar_xz(d))
        try:
            tm = transition_amplitudes(eigenbasis(spec))
        except DegenerateLabelingError:
            continue
        row_down[j] = tm.m[0, 3]
        row_up[j] = tm.m[0, 1]
    return row_down, row_up


def sweep_hybridization(
    base: SpinSystemSpec, b0_values, d_xz_values, gamma_e: float, gamma_n: float, jobs: int = 1
) -> SweepResult:
    """Evaluate the hybridization weights over a grid of fields and dipolar strengths.

    Only ``base.coupling`` (the isotropic hyperfine strength) is taken from
    ``base``; the splittings follow from ``gamma_e * B0`` and ``gamma_n * B0``.
    Rows are distributed over ``jobs`` worker processes.
    """
    b0 = np.asarray(b0_values, dtype=float)
    dxz = np.asarray(d_xz_values, dtype=float)
    tasks = [(float(b), dxz, base.coupling, gamma_e, gamma_n) for b in b0]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(t) for t in tasks]
    m_down = np.array([r[0] for r in rows]).reshape(len(b0), len(dxz))
    m_up = np.array([r[1] for r in rows]).reshape(len(b0), len(dxz))
    return SweepResult(b0, dxz, m_down, m_up)
