"""Subcalculi given by integral representations, and sequence-driven extension.

Stieltjes functions ``int mu(ds)/(1+sz)^m`` map to ``int (1+sA)^-m mu(ds)``;
Hirsch functions reduce to Stieltjes ones; weighted resolvent integrals
``int (t+A)^-1 mu(dt)`` or ``int A(t+A)^-1 mu(dt)`` cover the Nollau and
Dungey examples.  Half-line integrals run in ``u = log t``.

:func:`uniform_extension_eval` takes a sequence ``f_n -> f`` with computed
``Phi(f_n)`` and returns the operator limit when both convergences can be
verified, with an extrapolated limit and an explicit trust radius.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import quad
from .errors import (AngleViolation, DomainMismatch, NoConvergence, NoOperatorLimit,
                     QuadratureFailure)
from .extend import is_anchor_set
from .funsym import (ClosedSector, FunctionSymbol, HirschRep, MeasureRep, StieltjesRep,
                     e_symbol, ee_from_limits, hirsch_split, integrate_measure, plain_symbol,
                     restrict, stieltjes_eval)
from .numlin import DEFAULT_TOL, ToleranceConfig, as_matrix, eig_oracle, op_norm, oracle_function
from .report import CalculusReport
from .sector import make_handle, phi_ee, resolvent_at_minus_one

SHIFT_INVERSE = "ShiftInverse"
A_OVER_SHIFT = "AOverShift"


# -- convergence bookkeeping ---------------------------------------------------------


@dataclass
class ConvergenceProbe:
    """How to test ``f_n -> f`` (tau_1) and ``Phi(f_n) -> T`` (tau_2).

    ``mode`` is ``"uniform"`` (sup over the grid) or ``"bp"`` (pointwise on the
    grid plus ``sup_n sup_grid |f_n| <= sup_bound``).  ``operator_mode`` is
    ``"norm"`` or ``"separated"``; the latter compares ``D Phi(f_n)`` for each
    ``D`` in ``separating``.
    """

    grid: np.ndarray
    mode: str = "uniform"
    sup_bound: float = math.inf
    operator_mode: str = "norm"
    separating: Optional[list] = None
    tau1_tol: float = 1e-3

    def __post_init__(self):
        self.grid = np.atleast_1d(np.asarray(self.grid, dtype=complex))
        if self.grid.size == 0:
            raise ValueError("probe grid is empty")
        if self.mode not in ("uniform", "bp"):
            raise ValueError(f"unknown mode {self.mode}")
        if self.mode == "bp" and not math.isfinite(self.sup_bound):
            raise ValueError("bp probes need a finite sup bound")
        if self.operator_mode not in ("norm", "separated"):
            raise ValueError(f"unknown operator mode {self.operator_mode}")
        if self.operator_mode == "separated":
            if not self.separating:
                raise ValueError("separated mode needs a separating set")
            if not is_anchor_set(self.separating)[0]:
                raise ValueError("separating set is not point separating")


def sector_grid(omega: float, radii=(1e-2, 1e-1, 0.5, 1.0, 2.0, 10.0, 1e2), fractions=(-0.9, -0.5, 0.0, 0.5, 0.9)):
    """Probe points ``r e^{i theta}`` with ``theta = fraction * omega``."""
    return np.array([r * np.exp(1j * a * omega) for r in radii for a in fractions])


def default_separating(A) -> list:
    """``{(I + A)^-2}``, point separating because it is invertible."""
    R = resolvent_at_minus_one(A)
    return [R @ R]


@dataclass
class SequenceApproximant:
    terms: list  # (f_n, Phi(f_n))
    target: Optional[FunctionSymbol] = None
    index: list = field(default_factory=list)

    def __post_init__(self):
        dims = {np.shape(P) for _, P in self.terms}
        if len(dims) > 1:
            raise ValueError("all Phi(f_n) must have the same shape")
        if not self.index:
            self.index = list(range(1, len(self.terms) + 1))

    @property
    def matrices(self):
        return [np.asarray(P) for _, P in self.terms]


def bp_sequence_check(fns: Sequence[FunctionSymbol], target: FunctionSymbol, grid, bound: float,
                      pt_tol: float = 1e-3) -> bool:
    """Pointwise convergence on ``grid`` and ``sup_n sup_grid |f_n| <= bound``."""
    grid = np.atleast_1d(np.asarray(grid, dtype=complex))
    vals = [np.asarray(f(grid)) for f in fns]
    if not all(np.all(np.isfinite(v)) for v in vals):
        return False
    if max(float(np.max(np.abs(v))) for v in vals) > bound * (1 + 1e-12):
        return False
    tgt = np.asarray(target(grid))
    err = np.abs(vals[-1] - tgt)
    return bool(np.all(err <= pt_tol * (1 + np.abs(tgt))))


def _tau1_errors(seq: SequenceApproximant, probe: ConvergenceProbe):
    tgt = np.asarray(seq.target(probe.grid))
    errs, sup = [], 0.0
    for f, _ in seq.terms:
        v = np.asarray(f(probe.grid))
        sup = max(sup, float(np.max(np.abs(v))))
        errs.append(np.abs(v - tgt))
    return errs, sup, tgt


def _geometric_tail(views, dist, floor):
    """Entrywise ``v_k + d_k r_k/(1 - r_k)`` with ``d_k = v_k - v_{k-1}``, ``r_k = d_k/d_{k-1}``.

    Entries whose increments do not contract (``|r| >= 0.9``) or have already
    settled are left as they are.
    """
    out = []
    for k in range(2, len(views)):
        row = []
        for x, y, w in zip(views[k], views[k - 1], views[k - 2]):
            d1, d0 = x - y, y - w
            den = d0 - d1
            ok = (np.abs(d1) < 0.9 * np.abs(d0)) & (np.abs(d1) > floor) & (np.abs(den) > floor)
            corr = np.zeros_like(x)
            corr[ok] = d1[ok] ** 2 / den[ok]
            row.append(x + corr)
        out.append(row)
    return out


def uniform_extension_eval(seq: SequenceApproximant, probe: ConvergenceProbe,
                           tol: float = 1e-6, check_symbols: bool = True) -> CalculusReport:
    """Limit of ``Phi(f_n)`` after verifying ``f_n -> f`` in the probe's sense.

    The limit is extrapolated as ``last + (last - prev) r/(1 - r)`` with ``r``
    the ratio of the last two increments (measured in the probe's operator
    mode).  When the corrected terms still move, the same correction is applied
    to them once more; the trust radius is the size of the last correction.
    """
    details = {"index": list(seq.index)}
    if check_symbols and seq.target is not None:
        errs, sup, tgt = _tau1_errors(seq, probe)
        if probe.mode == "uniform":
            last = float(np.max(errs[-1]))
            first = float(np.max(errs[0]))
            details["tau1_sup_errors"] = [float(np.max(e)) for e in errs]
            if last > probe.tau1_tol or (last > tol and last > first):
                raise NoConvergence(f"sup error {last:.3e} on the grid does not go to 0")
        else:
            rel = errs[-1] / (1 + np.abs(tgt))
            details["tau1_pointwise_errors"] = [float(np.max(e)) for e in errs]
            details["tau1_sup"] = sup
            if float(np.max(rel)) > probe.tau1_tol:
                raise NoConvergence(f"pointwise error {float(np.max(rel)):.3e} on the grid")
            if sup > probe.sup_bound * (1 + 1e-12):
                raise NoConvergence(f"sup |f_n| = {sup:.3e} exceeds the bound {probe.sup_bound:.3e}")
    mats = seq.matrices
    if probe.operator_mode == "norm":
        views = [[M] for M in mats]
    else:
        views = [[D @ M for D in probe.separating] for M in mats]

    def dist(a, b):
        return max(op_norm(x - y) for x, y in zip(a, b))

    inc = [dist(views[k], views[k - 1]) for k in range(1, len(views))]
    details["increments"] = inc
    scale = 1.0 + max(op_norm(v) for v in views[-1])
    floor = 1e-13 * scale
    if not inc:
        raise NoOperatorLimit("need at least two terms")
    if inc[-1] <= floor:
        limit_view, trust, r = views[-1], inc[-1], 0.0
    else:
        if len(inc) < 2:
            raise NoOperatorLimit("need at least three terms to judge convergence")
        r = inc[-1] / inc[-2] if inc[-2] > floor else 1.0
        if r >= 0.9 and inc[-1] > tol:
            raise NoOperatorLimit(f"increments do not contract (ratio {r:.3f}, last {inc[-1]:.3e})")
        level1 = _geometric_tail(views, dist, floor)
        limit_view = level1[-1]
        trust = inc[-1] * min(r, 0.9) / (1 - min(r, 0.9)) + floor
        inc1 = [dist(level1[k], level1[k - 1]) for k in range(1, len(level1))]
        if len(level1) >= 3 and inc1[-1] > 1e3 * floor:
            # the corrected terms still carry a faster geometric error; correct once more
            level2 = _geometric_tail(level1, dist, floor)
            limit_view = level2[-1]
            trust = dist(level2[-1], level1[-1]) + floor
            details["second_level"] = True
    details["ratio"] = r
    if probe.operator_mode == "norm":
        T = limit_view[0]
    else:
        D = np.vstack(probe.separating)
        L = np.vstack(limit_view)
        T = np.linalg.lstsq(D, L, rcond=None)[0]
    return CalculusReport(T, trust, "uniform-ext", details)


# -- Stieltjes and Hirsch ------------------------------------------------------------------


def _stieltjes_kernel(A, m):
    n = A.shape[0]
    eye = np.eye(n)

    def K(s):
        s = np.asarray(s, dtype=complex).ravel()
        M = eye[None] + s[:, None, None] * A[None]
        inv = np.linalg.inv(M)
        return np.linalg.matrix_power(inv, m) if m > 1 else (inv if m == 1 else np.broadcast_to(eye, M.shape).astype(complex))

    return K


def _oracle_residual(A, f, result):
    try:
        O = oracle_function(A, f, max_cond=1e8)
    except Exception:
        return None
    return float(op_norm(result - O) / (1 + op_norm(O)))


def phi_stieltjes(f: StieltjesRep, A, tol: ToleranceConfig = DEFAULT_TOL,
                  oracle: bool = False) -> CalculusReport:
    """``int (1 + sA)^-m mu(ds)``: atoms exactly, density in log coordinates."""
    A = as_matrix(A)
    h = make_handle(A, tol)
    K = _stieltjes_kernel(A, f.m)
    val, err, tail, nodes = integrate_measure(f.mu, K, tol.quad_rel_tol, kernel_decay=(0, 0))
    val = np.asarray(val, dtype=complex)
    if val.ndim == 0:
        val = np.zeros_like(A)
    sup_kernel = max(1.0, h.ray_bound) ** max(f.m, 1)
    bound = tol.quad_rel_tol * max(f.mu.tv_bound, 1.0) * sup_kernel
    total_err = err + tail
    if f.mu.density is not None and total_err > 100 * bound:
        raise QuadratureFailure(f"Stieltjes quadrature error {total_err:.2e} above {bound:.2e}")
    rep = CalculusReport(val, total_err, "stieltjes",
                         {"m": f.m, "nodes": nodes, "tail": tail, "tv_bound": f.mu.tv_bound})
    if oracle:
        rep.oracle_residual = _oracle_residual(A, lambda z: stieltjes_eval(f, z, tol), val)
    return rep


def _truncate(mu: MeasureRep, lo: float, hi: float) -> MeasureRep:
    """``mu`` on ``[lo, hi]`` plus its atom at 0, which needs no truncation."""
    mu_n = restrict(mu, lo, hi)
    zero = tuple((l, w) for l, w in mu.atoms if l == 0 and lo > 0)
    if not zero:
        return mu_n
    return replace(mu_n, atoms=zero + mu_n.atoms, tv_bound=mu_n.tv_bound + sum(abs(w) for _, w in zero))


def stieltjes_term_symbol(f: StieltjesRep, lo: float, hi: float, omega: float = 0.99 * math.pi,
                          tol: ToleranceConfig = DEFAULT_TOL) -> FunctionSymbol:
    """``f_n(z) = mu{0} + int_[lo,hi] mu(ds)/(1+sz)^m`` as an E_e symbol.

    With ``a_n`` the total mass of the truncated measure one has
    ``f_n = mu{0} + g_n + (a_n - mu{0})/(1+z)`` for ``m >= 1`` (``g_n`` in E
    since ``lo > 0``), and ``f_n = a_n`` for ``m = 0``.
    """
    mu_n = _truncate(f.mu, lo, hi)
    rep = StieltjesRep(f.m, mu_n)
    a_n = complex(mu_n.atom_mass)
    if mu_n.density is not None:
        a_n += complex(integrate_measure(mu_n, lambda s: np.ones(np.shape(s), dtype=complex), 1e-13)[0])
    a_0 = complex(sum((w for l, w in mu_n.atoms if l == 0), 0j))
    finf = a_n if f.m == 0 else a_0
    return ee_from_limits(lambda z, rep=rep: stieltjes_eval(rep, z, tol), a_n, finf, omega,
                          f"stieltjes[{lo:g},{hi:g}]")


def stieltjes_truncation_sequence(f: StieltjesRep, A, ns=None, tol: ToleranceConfig = DEFAULT_TOL,
                                  cross_check: Optional[int] = None) -> SequenceApproximant:
    """Terms ``Phi(f_n) = mu{0} + int_[1/n, n] (1+sA)^-m mu(ds)`` for ``n`` in ``ns``.

    With ``cross_check = n`` the term at that ``n`` is also computed by the
    contour engine from the symbol ``f_n`` and the difference is recorded in
    ``seq.cross_check``.
    """
    A = as_matrix(A)
    if ns is None:
        ns = [2 ** k for k in range(1, 21)]
    terms = []
    for n in ns:
        sym = stieltjes_term_symbol(f, 1.0 / n, float(n), tol=tol)
        Pn = phi_stieltjes(StieltjesRep(f.m, _truncate(f.mu, 1.0 / n, float(n))), A, tol).result
        terms.append((sym, Pn))
    target = plain_symbol(lambda z, f=f: stieltjes_eval(f, z, tol), 0.99 * math.pi, "stieltjes")
    seq = SequenceApproximant(terms, target, list(ns))
    if cross_check is not None:
        sym = stieltjes_term_symbol(f, 1.0 / cross_check, float(cross_check), tol=tol)
        P_sec = phi_ee(sym, make_handle(A, tol), None, tol).result
        P_dir = phi_stieltjes(StieltjesRep(f.m, _truncate(f.mu, 1.0 / cross_check, float(cross_check))), A, tol).result
        seq.cross_check = float(op_norm(P_sec - P_dir))
    return seq


def phi_hirsch(f: HirschRep, A, tol: ToleranceConfig = DEFAULT_TOL, oracle: bool = False) -> CalculusReport:
    """``a + A Phi(g) + Phi(h)`` from the split ``f = a + z g + h``."""
    A = as_matrix(A)
    a, g, hh = hirsch_split(f)
    rg = phi_stieltjes(g, A, tol)
    rh = phi_stieltjes(hh, A, tol)
    val = a * np.eye(A.shape[0]) + A @ rg.result + rh.result
    rep = CalculusReport(val, rg.err_estimate * op_norm(A) + rh.err_estimate, "hirsch", {"a": a})
    if oracle:
        from .funsym import hirsch_eval
        rep.oracle_residual = _oracle_residual(A, lambda z: hirsch_eval(f, z, tol), val)
    return rep


def hirsch_symbol(f: HirschRep, omega: float = 0.99 * math.pi, tol: ToleranceConfig = DEFAULT_TOL) -> FunctionSymbol:
    from .funsym import hirsch_eval
    return plain_symbol(lambda z, f=f: hirsch_eval(f, z, tol), omega, "hirsch", at_zero=complex(f.a))


# -- weighted resolvent integrals ---------------------------------------------------------


def _resolvent_kernel(A, kernel: str):
    n = A.shape[0]
    eye = np.eye(n)
    if kernel == SHIFT_INVERSE:
        return (lambda t: np.linalg.inv(np.asarray(t, dtype=complex).ravel()[:, None, None] * eye[None] + A[None])), (1, 1)
    if kernel == A_OVER_SHIFT:
        return (lambda t: A[None] @ np.linalg.inv(np.asarray(t, dtype=complex).ravel()[:, None, None] * eye[None] + A[None])), (0, 1)
    raise ValueError(f"unknown kernel {kernel}")


def scalar_resolvent_integral(mu: MeasureRep, kernel: str, z, rel_tol: float = 1e-11):
    """Scalar version ``int w(t)/(t+z) dt`` or ``int z/(t+z) w(t) dt`` at points ``z``."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if kernel == SHIFT_INVERSE:
        K, dec = (lambda t: 1.0 / (t[:, None] + z[None, :])), (1, 1)
    elif kernel == A_OVER_SHIFT:
        K, dec = (lambda t: z[None, :] / (t[:, None] + z[None, :])), (0, 1)
    else:
        raise ValueError(f"unknown kernel {kernel}")
    val = np.asarray(integrate_measure(mu, K, rel_tol, dec)[0])
    return val


def phi_resolvent_integral(mu: MeasureRep, kernel: str, A, tol: ToleranceConfig = DEFAULT_TOL,
                           oracle_fn: Optional[Callable] = None) -> CalculusReport:
    """``int (t+A)^-1 mu(dt)`` (ShiftInverse) or ``int A(t+A)^-1 mu(dt)`` (AOverShift)."""
    A = as_matrix(A)
    make_handle(A, tol)
    K, dec = _resolvent_kernel(A, kernel)
    val, err, tail, nodes = integrate_measure(mu, K, tol.quad_rel_tol, dec)
    val = np.asarray(val, dtype=complex)
    rep = CalculusReport(val, err + tail, "resolvent-integral",
                         {"kernel": kernel, "nodes": nodes, "tail": tail})
    if oracle_fn is not None:
        rep.oracle_residual = _oracle_residual(A, oracle_fn, val)
    return rep


def resolvent_integral_sequence(mu: MeasureRep, kernel: str, A, Us=None,
                                target: Optional[FunctionSymbol] = None,
                                tol: ToleranceConfig = DEFAULT_TOL) -> SequenceApproximant:
    """Window truncations ``t in [e^-U, e^U]`` of a weighted resolvent integral.

    Each ``f_U(z) = int_window w(t)/(t+z) dt`` is a scalar symbol in E_e; the
    matching operator ``int_window (t+A)^-1 w(t) dt`` needs no tail model.
    """
    A = as_matrix(A)
    if Us is None:
        Us = [2.0 ** k for k in range(3, 10)]
    K, _ = _resolvent_kernel(A, kernel)
    terms = []
    for U in Us:
        lo, hi = math.exp(-U), math.exp(U)
        mu_U = restrict(mu, lo, hi)
        P = np.asarray(integrate_measure(mu_U, K, tol.quad_rel_tol)[0], dtype=complex)
        f0 = complex(scalar_resolvent_integral(mu_U, kernel, [0.0])[0])
        finf = 0.0 if kernel == SHIFT_INVERSE else complex(integrate_measure(
            mu_U, lambda t: np.ones(np.shape(t), dtype=complex), 1e-12)[0])
        sym = ee_from_limits(lambda z, m=mu_U: scalar_resolvent_integral(m, kernel, z).reshape(np.shape(z)),
                             f0, finf, 0.99 * math.pi, f"window[{U:g}]")
        terms.append((sym, P))
    return SequenceApproximant(terms, target, list(Us))


# -- holomorphic semigroups and fractional powers --------------------------------------------


def hol_semigroup_symbol(lam: complex, alpha: complex) -> FunctionSymbol:
    """``(lam z)^alpha exp(-lam z)``: in E for ``Re alpha > 0``, in E_e for ``alpha = 0``."""
    lam, alpha = complex(lam), complex(alpha)
    omega = math.pi / 2 - abs(cmath.phase(lam))
    if omega <= 0:
        raise AngleViolation(f"exp(-lam z) is not bounded on any sector for lam={lam}")
    if alpha == 0:
        return ee_from_limits(lambda z, l=lam: np.exp(-l * z), 1.0, 0.0, omega, f"exp(-{lam}z)")
    if alpha.real <= 0:
        raise DomainMismatch("need alpha = 0 or Re alpha > 0")
    return e_symbol(lambda z, l=lam, a=alpha: (l * z) ** a * np.exp(-l * z), omega, f"({lam}z)^{alpha}exp(-{lam}z)")


def phi_hol_semigroup(mu: MeasureRep, alpha: complex, A, tol: ToleranceConfig = DEFAULT_TOL,
                      mode: str = "engine") -> CalculusReport:
    """``int (lam A)^alpha exp(-lam A) mu(d lam)`` for ``mu`` on a sector of angle ``phi``.

    ``mode="engine"`` evaluates every integrand value with the contour calculus;
    ``mode="oracle"`` uses the eigendecomposition.
    """
    A = as_matrix(A)
    h = make_handle(A, tol)
    phi_angle = mu.support.phi if isinstance(mu.support, ClosedSector) else 0.0
    if h.omega_se + phi_angle >= math.pi / 2:
        raise AngleViolation(f"omega_se + phi = {h.omega_se + phi_angle:.4f} >= pi/2")

    if mode == "oracle":
        orc = eig_oracle(A)

        def value(lam):
            with np.errstate(all="ignore"):
                v = (lam * orc.eigenvalues) ** alpha if alpha != 0 else np.ones_like(orc.eigenvalues)
                v = np.where(orc.eigenvalues == 0, 0.0 if alpha != 0 else 1.0, v)
            return orc.apply(v * np.exp(-lam * orc.eigenvalues))
    elif mode == "engine":
        def value(lam):
            return phi_ee(hol_semigroup_symbol(lam, alpha), h, None, tol).result
    else:
        raise ValueError(f"unknown mode {mode}")

    n = A.shape[0]
    total = np.zeros((n, n), dtype=complex)
    for loc, w in mu.atoms:
        total += w * value(complex(loc))
    err = 0.0
    if mu.density is not None:
        a, b = mu.window
        if not math.isfinite(b) or a <= 0:
            raise DomainMismatch("densities for the semigroup integral need a compact window in (0, inf)")
        rot = np.exp(1j * mu.ray_angle)

        def F(u):
            t = np.exp(u)
            return np.stack([mu.density(tt) * tt * value(tt * rot) for tt in t])

        res = quad.integrate(F, math.log(a), math.log(b), tol.quad_rel_tol, h0=max((math.log(b) - math.log(a)) / 2, 0.1),
                             order=8, max_doublings=6)
        total += res.value
        err = res.err
    return CalculusReport(total, err, "hol-semigroup", {"alpha": complex(alpha), "mode": mode})


BALAKRISHNAN_U = 40.0


def fractional_power(A, alpha: complex, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """``A^alpha`` for ``0 < Re alpha < 1`` by Balakrishnan's formula.

    ``A^alpha = sin(pi alpha)/pi int_0^inf t^(alpha-1) A (t+A)^-1 dt``, integrated
    in ``u = log t`` on ``|u| <= 40`` with both tails added in closed form
    (``e^{-alpha U}/alpha`` and ``e^{(alpha-1)U}/(1-alpha)`` times the kernel at the cut).
    """
    A = as_matrix(A)
    alpha = complex(alpha)
    if alpha == 0:
        return np.eye(A.shape[0], dtype=complex)
    if alpha == 1:
        return A.copy()
    if not 0 < alpha.real < 1:
        raise DomainMismatch("need 0 < Re alpha < 1")
    n = A.shape[0]
    eye = np.eye(n)

    def K(t):
        return A[None] @ np.linalg.inv(np.asarray(t, dtype=complex).ravel()[:, None, None] * eye[None] + A[None])

    def F(u):
        return np.exp(alpha * u)[:, None, None] * K(np.exp(u))

    U = BALAKRISHNAN_U
    res = quad.integrate(F, -U, U, tol.quad_rel_tol, h0=0.5)
    lo_tail = np.exp(-alpha * U) / alpha * K(np.array([math.exp(-U)]))[0]
    hi_tail = np.exp((alpha - 1) * U) / (1 - alpha) * (math.exp(U) * K(np.array([math.exp(U)]))[0])
    return np.sin(np.pi * alpha) / np.pi * (res.value + lo_tail + hi_tail)


def dungey_psi(A, tol: ToleranceConfig = DEFAULT_TOL, power_mode: str = "balakrishnan") -> CalculusReport:
    """``psi(A) = int_0^1 A^alpha d alpha``, the operator of ``(z-1)/log z``.

    ``power_mode`` selects how ``A^alpha`` is computed: ``"balakrishnan"``
    (resolvent integral) or ``"eigen"`` (eigendecomposition).
    """
    A = as_matrix(A)
    make_handle(A, tol)
    if power_mode == "eigen":
        orc = eig_oracle(A)

        def power(a):
            with np.errstate(all="ignore"):
                v = np.where(orc.eigenvalues == 0, 0.0, orc.eigenvalues ** a)
            return orc.apply(v)
    elif power_mode == "balakrishnan":
        def power(a):
            return fractional_power(A, a, tol)
    else:
        raise ValueError(f"unknown power mode {power_mode}")

    def F(alphas):
        return np.stack([power(float(a)) for a in alphas])

    res = quad.integrate(F, 0.0, 1.0, tol.quad_rel_tol, h0=0.5, order=16, max_doublings=5)
    return CalculusReport(res.value, res.err, "dungey", {"power_mode": power_mode, "nodes": res.nodes})


# -- standard sequences -------------------------------------------------------------------


def approximate_identity_sequence(e: FunctionSymbol, A, ns=None, tol: ToleranceConfig = DEFAULT_TOL) -> SequenceApproximant:
    """``phi_n e`` with ``phi_n = nz/(1+nz)``; the limit is ``Phi(e)``."""
    from .funsym import rational
    A = as_matrix(A)
    h = make_handle(A, tol)
    if ns is None:
        ns = [2 ** k for k in range(4, 21)]
    terms = []
    for n in ns:
        phin = rational(1, 1, 1.0 / n)  # z/(1/n + z) = nz/(1+nz)
        f = phin * e
        terms.append((f, phi_ee(f, h, None, tol).result))
    return SequenceApproximant(terms, e, list(ns))


def closability_sequence(kind: str, A, ns=None, tol: ToleranceConfig = DEFAULT_TOL) -> SequenceApproximant:
    """Three bp-null sequences whose operator images converge (to 0).

    ``"damped"``: ``e(z)/(1+nz)`` with ``e = z/(1+z)^2``;
    ``"bump"``: ``nz/(1+nz)^2``;
    ``"power"``: ``z/(1+z)^n``, bounded in ``n`` only on the right half-plane,
    so bp-probes for it must stay within ``|arg z| <= pi/2``.
    """
    from .funsym import constant, rational
    A = as_matrix(A)
    h = make_handle(A, tol)
    if ns is None:
        ns = [2 ** k for k in range(2, 21)] if kind != "power" else [2 ** k for k in range(1, 11)]
    terms = []
    for n in ns:
        if kind == "damped":
            f = rational(1, 2) * rational(0, 1, 1.0 / n) * (1.0 / n)
        elif kind == "bump":
            f = rational(1, 2, 1.0 / n) * (1.0 / n)
        elif kind == "power":
            f = rational(1, n)
        else:
            raise ValueError(f"unknown closability sequence {kind}")
        terms.append((f, phi_ee(f, h, None, tol).result))
    return SequenceApproximant(terms, constant(0.0), list(ns))
