"""Independent reference implementations used as test oracles.

Nothing here imports the package under test.
"""

import numpy as np


def s2_exact(ratio):
    """sin^2(theta) with tan(2 theta) = ratio."""
    return np.sin(0.5 * np.arctan(ratio)) ** 2


def heisenberg_matrix(eps_a, eps_d, j):
    """Two-spin exchange Hamiltonian written out element by element."""
    return np.array(
        [
            [(eps_a + eps_d) / 2 + j / 4, 0, 0, 0],
            [0, (eps_a - eps_d) / 2 - j / 4, j / 2, 0],
            [0, j / 2, -(eps_a - eps_d) / 2 - j / 4, 0],
            [0, 0, 0, -(eps_a + eps_d) / 2 + j / 4],
        ]
    )


def euler_propagate(l, rho, t, dt):
    """First-order fine-step integration, (I + L dt)^n rho."""
    n = int(round(t / dt))
    step = np.eye(len(rho)) + l * (t / n)
    return np.linalg.matrix_power(step, n) @ rho


def reference_ee(s2, gou, gid, god, giu, gt1=0.0):
    """Exchange-pair generator written out row by row.

    Unlisted entries are 0; row 3 column 6 of the thermal part is
    giu * s2.
    """
    c2 = 1 - s2
    t0 = np.array(
        [
            [-gou, 0, 0, 0, 0, 0],
            [0, -gou * c2, 0, 0, gid * s2, 0],
            [0, 0, -gou * s2, 0, gid * c2, 0],
            [0, 0, 0, 0, 0, gid],
            [gou, 0, 0, 0, -gid, 0],
            [0, gou * c2, gou * s2, 0, 0, -gid],
        ]
    )
    tf = np.array(
        [
            [0, 0, 0, 0, giu, 0],
            [0, -god * s2, 0, 0, 0, giu * c2],
            [0, 0, -god * c2, 0, 0, giu * s2],
            [0, 0, 0, -god, 0, 0],
            [0, god * s2, god * c2, 0, -giu, 0],
            [0, 0, 0, god, 0, -giu],
        ]
    )
    t1 = gt1 * np.array(
        [
            [-2, 0, 0, 0, 0, 0],
            [1, -1, 0, 0, 0, 0],
            [1, 0, -1, 0, 0, 0],
            [0, 1, 1, 0, 0, 0],
            [0, 0, 0, 0, -1, 0],
            [0, 0, 0, 0, 1, 0],
        ]
    )
    return t0 + tf + t1


def reference_en(s2, gou, gid, god, giu, gt1=0.0, gff=0.0):
    """Electron-nuclear generator written out row by row.

    The truncated row 2 column 1 of the thermal part is 0.
    """
    c2 = 1 - s2
    t0 = np.array(
        [
            [-gou, 0, 0, 0, 0, 0],
            [0, -gou, 0, 0, 0, 0],
            [0, 0, 0, 0, gid * c2, gid * s2],
            [0, 0, 0, 0, 0, gid],
            [gou, gou * s2, 0, 0, -gid * c2, 0],
            [0, gou * c2, 0, 0, 0, -gid * (1 + s2)],
        ]
    )
    tf = np.array(
        [
            [0, 0, 0, 0, giu, 0],
            [0, 0, 0, 0, giu * s2, giu * c2],
            [0, 0, -god, 0, 0, 0],
            [0, 0, 0, -god, 0, 0],
            [0, 0, god * c2, 0, -giu * (1 + s2), 0],
            [0, 0, god * s2, god, 0, -giu * c2],
        ]
    )
    t1 = np.array(
        [
            [-gt1, 0, 0, 0, 0, 0],
            [gt1 * s2, -gt1 * c2 - gff, 0, 0, 0, 0],
            [gt1 * c2, gff, -gt1 * s2, 0, 0, 0],
            [0, gt1 * c2, gt1 * s2, 0, 0, 0],
            [0, 0, 0, 0, 0, 0],
            [0, 0, 0, 0, 0, 0],
        ]
    )
    return t0 + tf + t1


def two_state_solution(t, g_up, g_down):
    """Closed-form P_up from an up start and from a down start."""
    g = g_up + g_down
    e = np.exp(-g * t)
    return (g_down + g_up * e) / g, g_down / g * (1 - e)


def fermi(e, mu, kt):
    return 1.0 / (1.0 + np.exp((e - mu) / kt))
