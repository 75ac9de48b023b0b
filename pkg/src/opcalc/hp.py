"""Hille-Phillips calculus for bounded matrix semigroups ``T(t) = exp(-tA)``.

``Psi_T(mu) = int T(s) mu(ds)`` realises ``Phi_T(L mu)``.  The complex
inversion formula recovers ``T(t)(I+A)^-2`` from resolvents on a vertical line
``Re z = omega`` with ``-1 < omega < 0``, traversed top down.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from dataclasses import dataclass

from . import quad
from .errors import DomainMismatch, NotBoundedSemigroup, QuadratureFailure, TruncationFailure
from .funsym import (FunctionSymbol, HPSymbol, IN_EE, MeasureRep, ee_from_limits,
                     integrate_measure, laplace_transform)
from .numlin import DEFAULT_TOL, ToleranceConfig, as_matrix, matrix_exp, op_norm, resolvents
from .report import CalculusReport
from .sector import make_handle, phi_ee, resolvent_at_minus_one
from .subcalc import SequenceApproximant

SAMPLE_T = tuple(2.0 ** k for k in range(-10, 11))


@dataclass(frozen=True)
class SemigroupHandle:
    A: np.ndarray
    M: float
    sample_grid: tuple

    @property
    def n(self) -> int:
        return self.A.shape[0]


def _rank(M, rel=1e-9):
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > rel * max(s[0], 1e-300))) if s.size else 0


def make_semigroup(A, tol: ToleranceConfig = DEFAULT_TOL, max_bound: float = 1e8) -> SemigroupHandle:
    """Handle for ``T(t) = exp(-tA)``; ``A`` needs spectrum in the closed right half-plane.

    Eigenvalues on the imaginary axis must be semisimple, otherwise ``T`` grows
    polynomially.  (Degenerate semigroups with a common kernel cannot occur for
    matrix exponentials, so no check is made for them.)
    """
    A = as_matrix(A)
    n = A.shape[0]
    scale = max(op_norm(A), 1.0)
    lam = np.linalg.eigvals(A)
    if np.any(lam.real < -1e-8 * scale):
        raise NotBoundedSemigroup("spectrum leaves the closed right half-plane")
    for mu in lam[np.abs(lam.real) <= 1e-8 * scale]:
        B = A - mu * np.eye(n)
        if _rank(B) != _rank(B @ B):
            raise NotBoundedSemigroup(f"eigenvalue {mu:.3g} on the imaginary axis is not semisimple")
    Ts = matrix_exp(-np.asarray(SAMPLE_T)[:, None, None] * A[None])
    M = max(1.0, float(np.max(np.linalg.norm(Ts, ord=2, axis=(1, 2)))))
    if M > max_bound:
        raise NotBoundedSemigroup(f"sampled sup |T(t)| = {M:.3e}")
    return SemigroupHandle(A, M, SAMPLE_T)


def semigroup_eval(h: SemigroupHandle, t: float) -> np.ndarray:
    if t < 0:
        raise DomainMismatch("t must be >= 0")
    return matrix_exp(-t * h.A)


def psi_hp(mu: MeasureRep, h: SemigroupHandle, tol: ToleranceConfig = DEFAULT_TOL) -> CalculusReport:
    """``int T(s) mu(ds)``: atoms exactly, density in log coordinates."""
    if not math.isfinite(mu.tv_bound):
        raise DomainMismatch("Hille-Phillips measures must have finite total variation")
    if any(complex(l).imag != 0 or complex(l).real < 0 for l, _ in mu.atoms):
        raise DomainMismatch("Hille-Phillips measures live on [0, inf)")
    A = h.A

    def K(s):
        s = np.asarray(s, dtype=float).ravel()
        return matrix_exp(-s[:, None, None] * A[None])

    val, err, tail, nodes = integrate_measure(mu, lambda s: K(np.real(s)), tol.quad_rel_tol, (0, 0))
    val = np.asarray(val, dtype=complex)
    if val.ndim == 0:
        val = np.zeros_like(A)
    bound = tol.quad_rel_tol * h.M * max(mu.tv_bound, 1.0)
    if err + tail > 100 * bound:
        raise QuadratureFailure(f"Hille-Phillips quadrature error {err + tail:.2e} above {bound:.2e}")
    return CalculusReport(val, err + tail, "hp", {"M": h.M, "nodes": nodes, "tv_bound": mu.tv_bound})


def hp_eval(sym: HPSymbol, h: SemigroupHandle, tol: ToleranceConfig = DEFAULT_TOL) -> CalculusReport:
    return psi_hp(sym.mu, h, tol)


# -- complex inversion ------------------------------------------------------------------

DEFAULT_OMEGA = -0.5


def _check_omega(omega):
    # the pole of (1+z)^-2 at -1 must stay left of the line
    if not -1.0 < omega < 0.0:
        raise DomainMismatch(f"inversion line needs -1 < omega < 0, got {omega}")


def _g(t):
    return lambda z: np.exp(-t * z) / (1.0 + z) ** 2


def complex_inversion(h: SemigroupHandle, t: float, omega: float = DEFAULT_OMEGA,
                      tol: ToleranceConfig = DEFAULT_TOL, max_height: float = 1e6) -> CalculusReport:
    """``T(t)(I+A)^-2`` from ``(1/2 pi i) int e^{-tz}/(1+z)^2 R(z,A) dz`` on ``Re z = omega``.

    Writing ``R(z) = I/z + A/z^2 + A^2 R(z)/z^2``, the first two terms give
    ``I + (-t-2) A`` by residues at 0 and the remainder decays like ``|y|^-5``,
    so the line is truncated at ``|Im z| = N`` with an explicit tail bound.
    """
    _check_omega(omega)
    if t < 0:
        raise DomainMismatch("t must be >= 0")
    A = h.A
    n = h.n
    g = _g(t)
    A2 = A @ A
    # sup |R| on the line bounds the remainder
    ys = np.concatenate([[0.0], np.logspace(-3, 6, 200)])
    Rs = resolvents(A, omega + 1j * np.concatenate([ys, -ys]))
    rmax = float(np.max(np.linalg.norm(Rs, ord=2, axis=(1, 2))))
    C = math.exp(-t * omega) * op_norm(A2) * rmax
    target = 0.1 * tol.quad_rel_tol
    # int_{|y|>N} C / y^5 dy / 2pi = C / (4 pi N^4)
    N = max(10.0, (C / (4 * math.pi * target)) ** 0.25) if C > 0 else 10.0
    if N > max_height:
        raise TruncationFailure(f"inversion line would need |Im z| up to {N:.3g}")

    def F(y):
        z = omega + 1j * np.asarray(y)
        w = (g(z) / z ** 2)[:, None, None]
        return w * (A2[None] @ resolvents(A, z))

    if C > 0:
        h0 = min(0.5, math.pi / (2 * max(t, 1e-3)))
        res = quad.integrate(F, -N, N, tol.quad_rel_tol, h0=h0, max_nodes=8_000_000)
        rem = -res.value / (2 * math.pi)
        qerr = res.err / (2 * math.pi)
    else:
        rem, qerr = np.zeros((n, n), dtype=complex), 0.0
    S = np.eye(n) + (-t - 2.0) * A + rem
    tail = C / (4 * math.pi * N ** 4) if C > 0 else 0.0
    R1 = resolvent_at_minus_one(A)
    ref = semigroup_eval(h, t) @ R1 @ R1
    resid = float(op_norm(S - ref))
    return CalculusReport(S, qerr + tail, "hp-inversion",
                          {"t": t, "omega": omega, "N": N, "tail_bound": tail}, oracle_residual=resid)


def _segment_rule(height: float, h0: float = 0.25, order: int = 16):
    panels = max(1, int(math.ceil(2 * height / h0)))
    return quad.panel_rule(-height, height, panels, order)


def coi_symbol(t: float, omega: float, height: float, chunk: int = 256) -> FunctionSymbol:
    """``f_n(z) = (1/2 pi i) int_{omega + i[-n, n]} e^{-wt}/(1+w)^2 dw/(w - z)`` (top down).

    Holomorphic off the segment, so on every sector of angle below ``pi/2``;
    ``f_n = g_n + f_n(0)/(1+z)`` with ``g_n`` in E.
    """
    y, wts = _segment_rule(height)
    w = omega + 1j * y
    gw = _g(t)(w) * wts / (-2 * math.pi)

    def func(z):
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        out = np.empty(flat.shape, dtype=complex)
        for s in range(0, flat.size, chunk):
            zz = flat[s:s + chunk]
            out[s:s + chunk] = (gw[None, :] / (w[None, :] - zz[:, None])).sum(axis=1)
        return out.reshape(z.shape)

    f0 = complex(func(np.array([0.0]))[0])
    return ee_from_limits(func, f0, 0.0, math.pi / 2, f"coi[{height:g}]")


def coi_direct(h: SemigroupHandle, t: float, omega: float, height: float) -> np.ndarray:
    """``Phi(f_n) = (1/2 pi i) int_{omega + i[-n, n]} e^{-wt}/(1+w)^2 R(w, A) dw``."""
    y, wts = _segment_rule(height)
    w = omega + 1j * y
    coef = _g(t)(w) * wts / (-2 * math.pi)
    out = np.zeros((h.n, h.n), dtype=complex)
    for s in range(0, w.size, 4096):
        out += np.tensordot(coef[s:s + 4096], resolvents(h.A, w[s:s + 4096]), axes=(0, 0))
    return out


def coi_approximants(h: SemigroupHandle, t: float, omega: float = DEFAULT_OMEGA, ns=None,
                     tol: ToleranceConfig = DEFAULT_TOL, cross_check: Optional[int] = 64) -> SequenceApproximant:
    """The approximants ``f_n`` with ``Phi(f_n)`` from the finite contour.

    When ``omega_se(A) < pi/2`` the term at ``n = cross_check`` is recomputed by
    the sector engine and the difference stored in ``seq.cross_check``.
    """
    _check_omega(omega)
    if ns is None:
        ns = [2 ** k for k in range(6, 11)]
    terms = [(coi_symbol(t, omega, float(n)), coi_direct(h, t, omega, float(n))) for n in ns]
    target = ee_from_limits(lambda z: np.exp(-t * z) / (1.0 + z) ** 2, 1.0, 0.0, math.pi / 2,
                            f"exp(-{t:g}z)/(1+z)^2")
    seq = SequenceApproximant(terms, target, list(ns))
    seq.cross_check = None
    if cross_check is not None:
        sh = make_handle(h.A, tol)
        if sh.omega_se < math.pi / 2 - 1e-6:
            sym = coi_symbol(t, omega, float(cross_check))
            P_sec = phi_ee(sym, sh, None, tol).result
            seq.cross_check = float(op_norm(P_sec - coi_direct(h, t, omega, float(cross_check))))
    return seq


def monotone_tail(values, floor: float = 1e-8) -> bool:
    """Non-increasing up to ``floor``."""
    return all(b <= a + floor for a, b in zip(values, values[1:]))


# -- commutant and compatibility -----------------------------------------------------------


def commutant_check(S, h: SemigroupHandle, tol: float = 1e-9, ts=None):
    """(S commutes with (I+A)^-1, S commutes with every sampled T(t))."""
    S = as_matrix(S)
    R = resolvent_at_minus_one(h.A)
    scale = 1.0 + op_norm(S)
    c1 = op_norm(S @ R - R @ S) / (scale * max(op_norm(R), 1e-300))
    ts = h.sample_grid if ts is None else ts
    Ts = matrix_exp(-np.asarray(ts)[:, None, None] * h.A[None])
    c2 = max(op_norm(S @ T - T @ S) / (scale * max(op_norm(T), 1e-300)) for T in Ts)
    return c1 <= tol, c2 <= tol


def hp_sectorial_compat(e: FunctionSymbol, mu: MeasureRep, h: SemigroupHandle,
                        tol: ToleranceConfig = DEFAULT_TOL, pair_tol: float = 1e-9) -> dict:
    """Compare ``Psi_T(mu)`` with the sectorial ``Phi_A(e)`` for a Laplace pair ``L mu = e``."""
    if IN_EE not in e.tags:
        raise DomainMismatch(f"{e.name} is not tagged as an E_e symbol")
    zs = np.array([0.0, 0.3, 1.0, 2.0 + 1.0j, 5.0 - 2.0j, 20.0, 0.5j])
    pair = max(abs(laplace_transform(mu, z, tol) - complex(e(np.array([z]))[0])) for z in zs)
    if pair > pair_tol:
        raise DomainMismatch(f"L mu differs from {e.name} by {pair:.2e}")
    hp_side = psi_hp(mu, h, tol).result
    sec_side = phi_ee(e, make_handle(h.A, tol), None, tol).result
    diff = float(op_norm(hp_side - sec_side))
    return {"symbol": e.name, "pair_residual": pair, "difference": diff,
            "hp": hp_side, "sector": sec_side}
