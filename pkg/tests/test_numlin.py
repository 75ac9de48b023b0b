import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from opcalc import quad
from opcalc.errors import NotDiagonalizable, QuadratureStall, SingularShift
from opcalc.numlin import (DEFAULT_TOL, Subspace, ToleranceConfig, as_matrix, containment_residual,
                           eig_oracle, matrix_exp, nullspace, op_norm, oracle_function, orth,
                           principal_angles, resolvent, resolvents, spectral_radius,
                           subspace_gap, subspace_intersect, subspace_sum)


def _complex_matrix(seed, n, scale=1.0):
    r = np.random.default_rng(seed)
    return scale * (r.normal(size=(n, n)) + 1j * r.normal(size=(n, n)))


@pytest.mark.parametrize("field", ["rank_rel_tol", "solve_rel_tol", "quad_rel_tol", "norm_abs_floor"])
def test_tolerances_must_be_positive(field):
    with pytest.raises(ValueError):
        ToleranceConfig(**{field: 0.0})


def test_rank_tolerance_below_one():
    with pytest.raises(ValueError):
        ToleranceConfig(rank_rel_tol=1.0)


def test_as_matrix_rejects_rectangular():
    with pytest.raises(ValueError):
        as_matrix(np.ones((2, 3)))


def test_op_norm_is_spectral_norm():
    M = np.diag([3.0, -4.0])
    assert op_norm(M) == pytest.approx(4.0)


def test_nullspace_and_orth():
    M = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    K = nullspace(M)
    assert K.dim == 1
    assert op_norm(M @ K.basis) < 1e-12
    S = orth(np.array([[1.0, 2.0], [0.0, 0.0], [0.0, 0.0]]))
    assert S.dim == 1


def test_subspace_lattice():
    e = np.eye(3)
    a = Subspace(3, e[:, :2])
    b = Subspace(3, e[:, 1:])
    assert subspace_intersect([a, b]).dim == 1
    assert subspace_sum([a, b]).dim == 3
    assert subspace_gap(a, a) < 1e-14
    assert subspace_gap(a, b) == pytest.approx(1.0)
    assert containment_residual(e[:, 1:2], a) < 1e-14


def test_principal_angles_known():
    a = Subspace(2, np.array([[1.0], [0.0]]))
    t = 0.3
    b = Subspace(2, np.array([[math.cos(t)], [math.sin(t)]]))
    assert principal_angles(a, b)[0] == pytest.approx(t)


def test_resolvent_and_singular_shift():
    A = np.diag([1.0, 2.0]).astype(complex)
    assert np.allclose(resolvent(A, 3.0), np.diag([0.5, 1.0]))
    with pytest.raises(SingularShift):
        resolvent(A, 1.0)


def test_resolvents_batch_matches_single():
    A = _complex_matrix(1, 4)
    zs = np.array([5.0 + 1j, -7.0, 3j * 4])
    R = resolvents(A, zs)
    for z, Rz in zip(zs, R):
        assert np.allclose(Rz, resolvent(A, z))


def test_eig_oracle_rejects_jordan():
    with pytest.raises(NotDiagonalizable):
        eig_oracle(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_oracle_function_on_diagonal():
    F = oracle_function(np.diag([1.0, 4.0]), np.sqrt)
    assert np.allclose(F, np.diag([1.0, 2.0]))


def test_spectral_radius():
    assert spectral_radius(np.array([[0.0, 2.0], [-2.0, 0.0]])) == pytest.approx(2.0)


@pytest.mark.parametrize("scale", [1e-3, 0.5, 3.0, 40.0])
def test_matrix_exp_matches_scipy(scale):
    A = _complex_matrix(7, 5, scale)
    E = matrix_exp(A)
    ref = scipy.linalg.expm(A)
    assert op_norm(E - ref) <= 1e-12 * max(1.0, op_norm(ref)) * 50


def test_matrix_exp_batch():
    A = _complex_matrix(3, 3, 0.7)
    batch = np.stack([A, 2 * A])
    E = matrix_exp(batch)
    assert np.allclose(E[1], scipy.linalg.expm(2 * A))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6), st.floats(0.01, 5.0))
def test_matrix_exp_group_property(seed, n, scale):
    A = _complex_matrix(seed, n, scale / math.sqrt(n))
    lhs = matrix_exp(2 * A)
    E = matrix_exp(A)
    assert op_norm(lhs - E @ E) <= 1e-11 * (1 + op_norm(lhs))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6))
def test_nullspace_property(seed, n):
    M = _complex_matrix(seed, n)
    M[:, -1] = M[:, 0] + 2 * M[:, 1] if n > 2 else M[:, 0]
    K = nullspace(M)
    assert K.dim >= 1
    assert op_norm(M @ K.basis) <= 1e-9 * op_norm(M)


# quadrature


def test_quad_polynomial_exact():
    res = quad.integrate(lambda x: x ** 5, 0.0, 2.0, 1e-13)
    assert res.value == pytest.approx(2 ** 6 / 6, rel=1e-14)


def test_quad_matrix_valued():
    res = quad.integrate(lambda x: np.stack([np.eye(2) * np.cos(xx) for xx in x]), 0.0, math.pi / 2, 1e-12)
    assert np.allclose(res.value, np.eye(2), atol=1e-12)


def test_quad_complex_oscillatory():
    res = quad.integrate(lambda x: np.exp(1j * 20 * x), 0.0, 1.0, 1e-12, h0=0.1)
    assert abs(res.value - (np.exp(20j) - 1) / 20j) < 1e-12


def test_quad_stall():
    with pytest.raises(QuadratureStall):
        quad.integrate(lambda x: np.sign(x - 1 / 3), 0.0, 1.0, 1e-15, max_doublings=3)


def test_quad_empty_interval():
    with pytest.raises(ValueError):
        quad.integrate(lambda x: x, 1.0, 1.0, 1e-10)


def test_default_tol_values():
    assert DEFAULT_TOL.quad_rel_tol == 1e-10
