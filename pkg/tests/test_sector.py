import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import opcalc.funsym as fs
from opcalc import make_handle, phi, phi_ee, phi_elementary
from opcalc.errors import AngleViolation, CertificateMissing, ContourThroughSpectrum, NotSectorial
from opcalc.numlin import op_norm
from opcalc.sector import ContourSpec, default_delta, resolvent_at_minus_one

from conftest import oracle_from_factors, sectorial_diagonalizable


def test_handle_angle_and_bound():
    h = make_handle(np.diag([1.0, 1j]))
    assert h.omega_se == pytest.approx(math.pi / 2)
    assert h.ray_bound >= 1.0


@pytest.mark.parametrize("A", [np.diag([-1.0, 1.0]), np.array([[0.0, 1.0], [0.0, 0.0]])])
def test_not_sectorial(A):
    with pytest.raises(NotSectorial):
        make_handle(A)


def test_semisimple_zero_is_sectorial():
    assert make_handle(np.diag([0.0, 2.0])).omega_se == 0.0


def test_phi_z_over_1pz2_upper_triangular():
    A = np.array([[1.0, 1.0, 0.0], [0.0, 2.0, 1.0], [0.0, 0.0, 3.0]])
    R = np.linalg.inv(np.eye(3) + A)
    assert op_norm(phi(fs.rational(1, 2), A) - A @ R @ R) < 1e-9


def test_phi_jordan_block_resolvent():
    # 1/(1+z) on a Jordan block equals the resolvent at -1 even though no eigenbasis exists
    A = np.array([[1.0, 1.0], [0.0, 1.0]])
    assert op_norm(phi(fs.inv_1pz(), A) - np.linalg.inv(np.eye(2) + A)) < 1e-14


def test_constant_and_one():
    A = np.diag([1.0, 5.0])
    assert np.allclose(phi(fs.one(), A), np.eye(2))
    assert np.allclose(phi(fs.constant(2 - 1j), A), (2 - 1j) * np.eye(2))


def test_exp_neg_matches_expm():
    import scipy.linalg
    A = np.array([[1.0, 0.5], [-0.5, 2.0]])
    assert op_norm(phi(fs.exp_neg(1.0), A) - scipy.linalg.expm(-A)) < 1e-9


def test_non_ee_symbol_is_refused():
    h = make_handle(np.diag([1.0, 2.0]))
    with pytest.raises(CertificateMissing):
        phi_ee(fs.inverse_z(), h)


def test_angle_violation():
    h = make_handle(np.diag([1.0, 1j]))
    with pytest.raises(AngleViolation):
        phi_ee(fs.exp_neg(1.0), h)
    with pytest.raises(AngleViolation):
        default_delta(1.0, 0.5)


def test_contour_through_spectrum():
    A = np.diag([1.0, np.exp(0.5j)])
    h = make_handle(A)
    with pytest.raises(ContourThroughSpectrum):
        phi_elementary(fs.rational(1, 2), h, ContourSpec(0.5, 1e3))


def test_contour_radius_validation():
    with pytest.raises(ValueError):
        ContourSpec(0.5, 2.0)


@pytest.mark.parametrize("delta", [0.3, 1.0, 2.5])
def test_contour_angle_independence(delta):
    A = np.array([[0.5, 0.2], [0.0, 3.0]])
    ref = phi(fs.rational(1, 2), A)
    assert op_norm(phi(fs.rational(1, 2), A, delta=delta) - ref) < 1e-9


def test_report_fields():
    rep = phi_ee(fs.add(fs.constant(1.0), fs.rational(1, 2)), make_handle(np.diag([1.0, 2.0])))
    assert rep.calculus == "sector"
    assert rep.err_estimate >= 0
    assert rep.details["c"] == pytest.approx(1.0)


def test_resolvent_at_minus_one():
    assert np.allclose(resolvent_at_minus_one(np.diag([1.0, 3.0])), np.diag([0.5, 0.25]))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 5))
def test_oracle_equivalence_property(seed, n):
    A, V, lam = sectorial_diagonalizable(np.random.default_rng(seed), n)
    f = fs.rational(1, 2)
    O = oracle_from_factors(V, lam, f)
    assert op_norm(phi(f, A) - O) <= 1e-7 * (1 + op_norm(O))


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 4))
def test_multiplicativity_property(seed, n):
    A, _, _ = sectorial_diagonalizable(np.random.default_rng(seed), n)
    h = make_handle(A)
    f, g = fs.rational(1, 2), fs.inv_1pz()
    F, G = phi_ee(f, h).result, phi_ee(g, h).result
    FG = phi_ee(fs.multiply(f, g), h).result
    assert op_norm(FG - F @ G) <= 1e-8 * (1 + op_norm(FG))
