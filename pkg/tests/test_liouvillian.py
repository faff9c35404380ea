import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.linalg import expm

from oracles import reference_ee, reference_en
from qndsim import scenarios
from qndsim.liouvillian import (
    EE_BASIS,
    EN_BASIS,
    MIRROR,
    Liouvillian,
    assemble_aniso,
    assemble_ee,
    assemble_en,
    assemble_from_matrix,
    assemble_rt,
    basis_state,
    generator_for,
    mirror_state,
    validate_state,
)
from qndsim.reservoir import RateSet
from qndsim.spin_system import SpinSystemSpec, SystemKind, dipolar_xz, eigenbasis, transition_amplitudes

RATES = RateSet(gin_up=0.3, gout_up=1.7, gin_down=2.9, gout_down=0.11)


def _sc(s2):
    return np.sqrt(s2), np.sqrt(1 - s2)


@pytest.mark.parametrize("s2", [0.0, 2.4814e-3, 0.3])
@pytest.mark.parametrize("gt1", [0.0, 0.7])
def test_exchange_generator_matches_reference(s2, gt1):
    rates = RateSet(RATES.gin_up, RATES.gout_up, RATES.gin_down, RATES.gout_down, gamma_t1=gt1)
    l = assemble_ee(*_sc(s2), rates)
    expected = reference_ee(s2, RATES.gout_up, RATES.gin_down, RATES.gout_down, RATES.gin_up, gt1)
    assert_allclose(l.l, expected, rtol=0, atol=1e-15)
    assert l.basis == EE_BASIS


@pytest.mark.parametrize("s2", [0.0, 1.4e-6, 0.2])
@pytest.mark.parametrize("gt1,gff", [(0.0, 0.0), (1.0, 0.0533)])
def test_hyperfine_generator_matches_reference(s2, gt1, gff):
    rates = RateSet(RATES.gin_up, RATES.gout_up, RATES.gin_down, RATES.gout_down, gt1, gff)
    l = assemble_en(*_sc(s2), rates)
    expected = reference_en(s2, RATES.gout_up, RATES.gin_down, RATES.gout_down, RATES.gin_up, gt1, gff)
    assert_allclose(l.l, expected, rtol=0, atol=1e-15)
    assert l.basis == EN_BASIS


def test_exchange_zero_temperature_data_up_column():
    s2 = 0.01
    l = assemble_ee(*_sc(s2), RateSet(gout_up=1.0, gin_down=2.0)).l
    # the 1P data-up state reloads into the two mixed doublet states
    assert_allclose(l[:, 4], [0, 2 * s2, 2 * (1 - s2), 0, -2, 0])


def test_hyperfine_nuclear_down_column():
    s2, gid = 1e-4, 3.0
    l = assemble_en(*_sc(s2), RateSet(gin_down=gid)).l
    assert_allclose(l[:, 5], [0, 0, gid * s2, gid, 0, -gid * (1 + s2)])


def test_flip_flop_entries():
    l = assemble_en(1.0, 0.0, RateSet(gamma_ff=0.25)).l
    assert l[2, 1] == 0.25 and l[1, 1] == -0.25
    with pytest.raises(ValueError, match="flip-flop"):
        assemble_ee(1.0, 0.0, RateSet(gamma_ff=0.25))


def test_unmixed_exchange_keeps_data_spin():
    l = assemble_ee(0.0, 1.0, RATES).l
    # no process connects data-up states {0, 2, 4} to data-down states {1, 3, 5}
    up, down = [0, 2, 4], [1, 3, 5]
    assert np.all(l[np.ix_(up, down)] == 0) and np.all(l[np.ix_(down, up)] == 0)


def test_sc_normalisation_checked():
    with pytest.raises(ValueError):
        assemble_ee(0.5, 0.5, RATES)


def _rates_only():
    return RateSet(gin_up=0.4, gout_up=1.3, gin_down=2.2, gout_down=0.05)


def test_anisotropic_without_dipolar_matches_isotropic():
    spec = SpinSystemSpec(SystemKind.ANISOTROPIC_EN, 49.5e9, 15e6, 4.508e6, dipolar_xz(0.0))
    iso = SpinSystemSpec(SystemKind.HYPERFINE_EN, 49.5e9, 15e6, 4.508e6)
    aniso = assemble_aniso(transition_amplitudes(eigenbasis(spec)), _rates_only())
    basis = eigenbasis(iso)
    ref = assemble_en(*basis.sc, _rates_only())
    assert_allclose(aniso.l, ref.l, rtol=0, atol=1e-12)


def test_anisotropic_converges_as_dipolar_vanishes():
    iso = eigenbasis(SpinSystemSpec(SystemKind.HYPERFINE_EN, 49.5e9, 15e6, 4.508e6))
    ref = assemble_en(*iso.sc, _rates_only()).l
    errs = []
    # the dipolar admixture interferes with the isotropic mixing, so the leading error is linear in D
    for d in (1e5, 5e4, 2.5e4, 1.25e4, 6.25e3):
        spec = SpinSystemSpec(SystemKind.ANISOTROPIC_EN, 49.5e9, 15e6, 4.508e6, dipolar_xz(d))
        errs.append(np.abs(assemble_aniso(transition_amplitudes(eigenbasis(spec)), _rates_only()).l - ref).max())
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios > 1.9)
    assert errs[-1] < 2e-7


def test_anisotropic_rejects_relaxation():
    tm = transition_amplitudes(eigenbasis(scenarios.anisotropic_system()))
    with pytest.raises(ValueError):
        assemble_aniso(tm, RateSet(gamma_t1=1.0))
    with pytest.raises(ValueError):
        assemble_aniso(tm, RateSet(gamma_ff=1.0))


def test_per_transition_assembly_matches_exchange_generator():
    basis = eigenbasis(scenarios.exchange_system())
    tm = transition_amplitudes(basis)
    rates = RateSet(gout_up=1.0, gin_down=1.0)
    assert_allclose(assemble_from_matrix(tm, rates).l, assemble_ee(*basis.sc, rates).l, atol=1e-14)


def test_generator_for_dispatch():
    assert generator_for(eigenbasis(scenarios.exchange_system()), RATES).basis == EE_BASIS
    assert generator_for(eigenbasis(scenarios.hyperfine_system()), RATES).basis == EN_BASIS
    deg = SpinSystemSpec(SystemKind.HEISENBERG_EE, 1e9, 1e9, 1e6, degenerate=True)
    l = generator_for(eigenbasis(deg), RATES)
    assert l.basis[1:3] == ("S", "T")
    assert_allclose(l.l, reference_ee(0.5, RATES.gout_up, RATES.gin_down, RATES.gout_down, RATES.gin_up))


def test_rt_nuclear_down_column():
    s2, g = 1e-5, 2.8e4
    full, eff = assemble_rt(np.sqrt(s2), g)
    assert_allclose(full[:, 3], [g * s2, g, 0, -g * (1 + s2)])
    assert_allclose(full.sum(axis=0), 0, atol=1e-10)
    assert_allclose(eff, g * s2 * np.array([[-1, 1], [1, -1]]))


def _rt_reduction_mismatch(s2, g=2.8e4):
    full, eff = assemble_rt(np.sqrt(s2), g)
    t = 0.2 / (g * s2)
    errs = []
    for start, nuc0 in (([0.5, 0, 0.5, 0], [1.0, 0.0]), ([0, 0.5, 0, 0.5], [0.0, 1.0])):
        rho = expm(full * t) @ np.array(start)
        pol4 = rho[0] + rho[2] - (rho[1] + rho[3])
        nuc = expm(eff * t) @ np.array(nuc0)
        pol2 = nuc[0] - nuc[1]
        errs.append(abs(pol4 - pol2) / abs(pol2))
    return max(errs)


def test_rt_full_generator_flips_at_half_the_effective_rate():
    # adiabatic elimination of the fast tunnelling leaves a flip rate g s2 / 2 per orientation
    s2, g = 1e-5, 2.8e4
    full, _ = assemble_rt(np.sqrt(s2), g)
    t = 0.2 / (g * s2)
    rho = expm(full * t) @ np.array([0.5, 0, 0.5, 0])
    pol = rho[0] + rho[2] - (rho[1] + rho[3])
    assert pol == pytest.approx(np.exp(-g * s2 * t), rel=1e-3)


@pytest.mark.parametrize("s2", [1e-6, 1e-5])
def test_rt_reduction_to_effective_generator(s2):
    # expected to fail: the reduced rate is half the rate of the effective generator
    assert _rt_reduction_mismatch(s2) < 1e-3


def test_rt_validation():
    with pytest.raises(ValueError):
        assemble_rt(0.1, -1.0)
    with pytest.raises(ValueError):
        assemble_rt(1.5, 1.0)


def test_liouvillian_validation():
    with pytest.raises(ValueError, match="sum"):
        Liouvillian(("a", "b"), [[-1.0, 0.0], [0.5, 0.0]])
    with pytest.raises(ValueError, match="non-negative"):
        Liouvillian(("a", "b"), [[1.0, -1.0], [-1.0, 1.0]])
    with pytest.raises(ValueError, match="shape"):
        Liouvillian(("a",), np.zeros((2, 2)))
    with pytest.raises(ValueError, match="non-finite"):
        Liouvillian(("a", "b"), [[np.nan, 0.0], [0.0, 0.0]])


def test_liouvillian_is_immutable_and_combinable():
    a = assemble_ee(0.0, 1.0, RATES)
    with pytest.raises(ValueError):
        a.l[0, 0] = 1.0
    assert_allclose((a + a).l, a.scaled(2.0).l)
    with pytest.raises(ValueError):
        a + assemble_en(0.0, 1.0, RATES)


@pytest.mark.parametrize("assemble", [assemble_ee, assemble_en])
def test_relabelling_equals_exchanging_channel_rates(assemble):
    l = assemble(*_sc(0.02), RATES)
    assert_allclose(l.mirrored().l, assemble(*_sc(0.02), RATES.mirrored()).l, rtol=0, atol=1e-15)
    assert_allclose(l.mirrored().l, l.l[np.ix_(MIRROR, MIRROR)])
    assert_allclose(l.mirrored().mirrored().l, l.l)


def test_state_helpers():
    rho = basis_state(EE_BASIS, "↑A↓D")
    assert rho[1] == 1.0 and rho.sum() == 1.0
    assert_allclose(mirror_state(rho), basis_state(EE_BASIS, "↓A↑D"))
    with pytest.raises(KeyError):
        basis_state(EE_BASIS, "X")
    with pytest.raises(ValueError):
        validate_state([0.5, 0.6, 0, 0, 0, 0])
    with pytest.raises(ValueError):
        validate_state([1.1, -0.1, 0, 0, 0, 0])
    with pytest.raises(ValueError):
        validate_state([1.0, 0, 0])
