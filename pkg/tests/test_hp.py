import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

import opcalc.funsym as fs
from opcalc import (coi_approximants, commutant_check, complex_inversion, hp_sectorial_compat,
                    make_semigroup, psi_hp)
from opcalc.errors import DomainMismatch, NotBoundedSemigroup
from opcalc.hp import monotone_tail, semigroup_eval
from opcalc.numlin import op_norm

ROT = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)


@pytest.mark.parametrize("A", [np.diag([-0.1, 1.0]), np.array([[0.0, 1.0], [0.0, 0.0]]),
                               np.array([[1j, 1.0], [0.0, 1j]])])
def test_not_bounded_semigroup(A):
    with pytest.raises(NotBoundedSemigroup):
        make_semigroup(A)


def test_rotation_is_bounded():
    h = make_semigroup(ROT)
    assert h.M == pytest.approx(1.0)


def test_semigroup_eval_negative_time():
    with pytest.raises(DomainMismatch):
        semigroup_eval(make_semigroup(ROT), -1.0)


def test_psi_hp_dirac_is_semigroup():
    h = make_semigroup(np.array([[1.0, 2.0], [0.0, 0.5]], dtype=complex))
    rep = psi_hp(fs.dirac(1.5), h)
    assert op_norm(rep.result - scipy.linalg.expm(-1.5 * h.A)) < 1e-13


def test_psi_hp_exp_decay_is_resolvent():
    h = make_semigroup(ROT)
    rep = psi_hp(fs.exp_decay(1.0), h)
    assert op_norm(rep.result - np.linalg.inv(np.eye(2) + ROT)) < 1e-9


def test_psi_hp_rejects_complex_atoms():
    with pytest.raises(DomainMismatch):
        psi_hp(fs.atomic([(1j, 1.0)]), make_semigroup(ROT))


@pytest.mark.parametrize("omega", [0.0, -1.0, 0.5])
def test_inversion_line_validated(omega):
    with pytest.raises(DomainMismatch):
        complex_inversion(make_semigroup(ROT), 1.0, omega)


@pytest.mark.parametrize("t", [0.0, 0.5, 1.0, 4.0])
@pytest.mark.parametrize("omega", [-0.25, -0.5, -0.75])
def test_inversion_rotation(t, omega):
    h = make_semigroup(ROT)
    rep = complex_inversion(h, t, omega)
    R = np.linalg.inv(np.eye(2) + ROT)
    assert op_norm(rep.result - scipy.linalg.expm(-t * ROT) @ R @ R) < 1e-6
    assert rep.calculus == "hp-inversion"


def test_coi_cross_check_with_sector_engine():
    h = make_semigroup(np.diag([0.5, 2.0]).astype(complex))
    seq = coi_approximants(h, 1.0, ns=[64, 128], cross_check=64)
    assert seq.cross_check < 1e-8


def test_coi_skips_cross_check_on_imaginary_axis():
    seq = coi_approximants(make_semigroup(ROT), 1.0, ns=[64, 128])
    assert seq.cross_check is None


def test_monotone_tail_floor():
    assert monotone_tail([1e-3, 1e-5, 1e-9, 2e-9])
    assert not monotone_tail([1e-3, 1e-5, 1e-4])


def test_commutant_biconditional_examples():
    h = make_semigroup(np.diag([1.0, 2.0]).astype(complex))
    assert commutant_check(np.diag([3.0, -1.0]), h) == (True, True)
    assert commutant_check(np.array([[0.0, 1.0], [0.0, 0.0]]), h) == (False, False)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_commutant_biconditional_property(seed):
    rng = np.random.default_rng(seed)
    A = np.array([[1.0, 0.5, 0.0], [0.0, 2.0, 0.3], [0.0, 0.0, 0.5]], dtype=complex)
    h = make_semigroup(A)
    if seed % 2:
        c = rng.normal(size=3)
        S = c[0] * np.eye(3) + c[1] * A + c[2] * A @ A
    else:
        S = rng.normal(size=(3, 3))
    c1, c2 = commutant_check(S, h)
    assert c1 == c2


def test_compat_rejects_wrong_pair():
    h = make_semigroup(np.diag([1.0, 2.0]).astype(complex))
    with pytest.raises(DomainMismatch):
        hp_sectorial_compat(fs.inv_1pz(), fs.exp_decay(2.0), h)


def test_compat_rejects_non_ee_symbol():
    h = make_semigroup(np.diag([1.0, 2.0]).astype(complex))
    with pytest.raises(DomainMismatch):
        hp_sectorial_compat(fs.inverse_z(), fs.exp_decay(1.0), h)


def test_compat_report():
    h = make_semigroup(np.array([[1.0, 0.5], [0.0, 3.0]], dtype=complex))
    rep = hp_sectorial_compat(fs.inv_1pz(), fs.exp_decay(1.0), h)
    assert rep["difference"] < 1e-9
    assert rep["pair_residual"] < 1e-9
