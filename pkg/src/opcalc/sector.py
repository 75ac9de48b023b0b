"""Elementary sectorial calculus by contour quadrature.

For ``f`` in E on a sector of angle ``omega > omega_se(A)`` the operator

    Phi(f) = (1/2 pi i) int f(z) (z - A)^{-1} dz

is taken over the boundary of the sector of angle ``delta``, oriented
counterclockwise around the spectrum: the upper ray runs from infinity into 0,
the lower ray from 0 out to infinity.  Both rays are integrated in the
logarithmic coordinate ``z = exp(u +- i delta)``, so ``dz = z du`` and the
integrand decays at both ends of the u-line whenever f is in E.

Symbols in E_e are split as ``e + c + d/(1+z)``; the constant and resolvent
parts are applied exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import quad
from .errors import (AngleViolation, CertificateMissing, ContourThroughSpectrum,
                     NotSectorial, TruncationFailure)
from .funsym import IN_E, IN_EE, FunctionSymbol, decay_certificate
from .numlin import DEFAULT_TOL, ToleranceConfig, as_matrix, op_norm, resolvent, resolvents
from .report import CalculusReport

PROBE_FACTORS = (0.1, 0.5, 1.0, 2.0)
PROBE_LIMIT = 1e12
MAX_LOG_RADIUS = 700.0
ANGLE_MARGIN = 0.05


@dataclass(frozen=True)
class SectorialHandle:
    A: np.ndarray
    omega_se: float
    ray_bound: float
    eigenvalues: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[0]


def spectral_angles(eigenvalues, scale: float) -> np.ndarray:
    """``|Arg lambda|`` with eigenvalues below ``1e-12 * scale`` in modulus counted as 0."""
    lam = np.asarray(eigenvalues, dtype=complex)
    ang = np.abs(np.angle(lam))
    ang[np.abs(lam) <= 1e-12 * scale] = 0.0
    return ang


def _rank(M, tol: ToleranceConfig) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] <= tol.norm_abs_floor:
        return 0
    return int(np.sum(s > tol.rank_rel_tol * s[0]))


def make_handle(A, tol: ToleranceConfig = DEFAULT_TOL, npoints: int = 40,
                r_min: float = 1e-6, r_max: float = 1e6) -> SectorialHandle:
    """Estimate the sectoriality angle of ``A`` and verify it on probe rays.

    Besides the ray probe, the zero eigenvalue must be semisimple
    (``rank A = rank A^2``): for a nilpotent Jordan block ``|zR(z,A)|`` grows
    only like ``1/|z|`` and stays below any fixed probe threshold on
    ``[1e-6, 1e6]``, yet no angle makes it bounded near 0.
    """
    A = as_matrix(A)
    scale = max(op_norm(A), 1.0)
    lam = np.linalg.eigvals(A)
    omega_se = float(np.max(spectral_angles(lam, scale))) if lam.size else 0.0
    if omega_se >= math.pi - 1e-9:
        raise NotSectorial("spectrum meets the negative real axis")
    if _rank(A, tol) != _rank(A @ A, tol):
        raise NotSectorial("zero eigenvalue is not semisimple: |zR(z,A)| is unbounded near 0")
    radii = np.logspace(math.log10(r_min), math.log10(r_max), npoints)
    bound = 0.0
    for fac in PROBE_FACTORS:
        theta = omega_se + fac * (math.pi - omega_se) / 4
        for sign in (1, -1):
            z = radii * np.exp(1j * sign * theta)
            with np.errstate(all="ignore"):
                try:
                    Rz = resolvents(A, z)
                except np.linalg.LinAlgError as exc:
                    raise NotSectorial(f"probe ray at angle {sign * theta:.3f} hits the spectrum") from exc
            norms = np.linalg.norm(z[:, None, None] * Rz, ord=2, axis=(1, 2))
            if not np.all(np.isfinite(norms)) or norms.max() > PROBE_LIMIT:
                raise NotSectorial(f"|zR(z,A)| exceeds {PROBE_LIMIT:.0e} at angle {sign * theta:.3f}")
            bound = max(bound, float(norms.max()))
    return SectorialHandle(A, omega_se, bound, lam)


@dataclass(frozen=True)
class ContourSpec:
    """Boundary of the sector of angle ``delta``, truncated to ``1/R <= |z| <= R``."""

    delta: float
    R: float
    panels: int = 0
    orientation: str = "upper ray R*e^{i delta} -> 0, lower ray 0 -> R*e^{-i delta}"

    def __post_init__(self):
        if self.R < 10:
            raise ValueError("truncation radius must be >= 10")


def default_delta(omega_se: float, omega: float) -> float:
    """Midpoint angle, kept at least ``ANGLE_MARGIN`` away from the spectrum when possible."""
    if omega <= omega_se:
        raise AngleViolation(f"symbol angle {omega:.4g} does not exceed omega_se={omega_se:.4g}")
    mid = 0.5 * (omega_se + omega)
    return max(mid, min(omega_se + ANGLE_MARGIN, 0.25 * omega_se + 0.75 * omega))


def _check_delta(h: SectorialHandle, delta: float, omega: float):
    if delta >= omega:
        raise AngleViolation(f"delta={delta:.4g} not below the symbol angle {omega:.4g}")
    scale = max(op_norm(h.A), 1.0)
    ang = spectral_angles(h.eigenvalues, scale)
    nonzero = np.abs(h.eigenvalues) > 1e-12 * scale
    if np.any(nonzero & (np.abs(ang - delta) <= 1e-8)):
        raise ContourThroughSpectrum(f"contour angle {delta:.6g} meets the spectrum")
    if delta < h.omega_se:
        raise AngleViolation(f"delta={delta:.4g} below omega_se={h.omega_se:.4g}")


def _ray_integrand(f: FunctionSymbol, A: np.ndarray, delta: float):
    eu, ed = np.exp(1j * delta), np.exp(-1j * delta)

    def F(u):
        r = np.exp(u)
        zp, zm = r * eu, r * ed
        Rp, Rm = resolvents(A, zp), resolvents(A, zm)
        wp = (f(zp) * zp)[:, None, None]
        wm = (f(zm) * zm)[:, None, None]
        return (wm * Rm - wp * Rp) / (2j * math.pi)

    return F


def truncation_log_radius(f: FunctionSymbol, A: np.ndarray, delta: float, target: float):
    """Smallest ``U`` such that both tails of the u-integral beyond ``|u| = U`` are below ``target``.

    Uses the sampled integrand bound ``|f(z)| |zR(z,A)| / 2 pi`` on the decay
    certificate's grid, extended past the grid with the regressed power rates.
    Returns ``(U, tail_bound, certificate)``.
    """
    cert = decay_certificate(f, delta)
    if not cert:
        raise CertificateMissing(f"{f.name} not certified in E at delta={delta:.4g}: {cert.reason}")
    r = cert.radii
    u = np.log(r)
    du = u[1] - u[0]
    zr = np.concatenate([r * np.exp(1j * delta), r * np.exp(-1j * delta)])
    with np.errstate(all="ignore"):
        Rz = resolvents(A, zr)
    kn = np.linalg.norm(zr[:, None, None] * Rz, ord=2, axis=(1, 2))
    kn = np.maximum(kn[: r.size], kn[r.size:])
    g = cert.magnitudes * kn / (2 * math.pi)

    def side(gs, us, slope):
        # gs ordered from the centre outwards; returns U and tail for this side
        beyond = 0.0 if not math.isfinite(slope) else gs[-1] / abs(slope)
        cum = np.cumsum((gs * du)[::-1])[::-1] + beyond  # tail from index k outwards
        ok = np.nonzero(cum <= target)[0]
        if ok.size:
            k = int(ok[0])
            return abs(us[k]), float(cum[k])
        s = abs(slope)
        extra = math.log(gs[-1] / (s * target)) / s
        return abs(us[-1]) + max(extra, 0.0), target

    mid = r.size // 2
    U_out, t_out = side(g[mid:], u[mid:], cert.slope_inf)
    U_in, t_in = side(g[: mid + 1][::-1], u[: mid + 1][::-1], cert.slope0)
    U = max(U_out, U_in, math.log(10.0))
    if U > MAX_LOG_RADIUS:
        raise TruncationFailure(f"decay of {f.name} too slow: truncation at log R = {U:.0f} needed")
    return U, t_out + t_in, cert


def phi_elementary(f: FunctionSymbol, h: SectorialHandle, contour: Optional[ContourSpec] = None,
                   tol: ToleranceConfig = DEFAULT_TOL) -> CalculusReport:
    """``Phi(f)`` for ``f`` in E by truncated contour quadrature with panel doubling."""
    if IN_E not in f.tags:
        raise CertificateMissing(f"{f.name} is not tagged as a member of E")
    delta = contour.delta if contour is not None else default_delta(h.omega_se, f.omega)
    _check_delta(h, delta, f.omega)
    target = 0.1 * tol.quad_rel_tol
    U, tail, cert = truncation_log_radius(f, h.A, delta, target)
    if contour is not None:
        U = max(U, math.log(contour.R))
    F = _ray_integrand(f, h.A, delta)
    res = quad.integrate(F, -U, U, tol.quad_rel_tol, h0=0.5)
    details = {"delta": delta, "R": math.exp(U), "panels": res.panels, "nodes": res.nodes,
               "tail_bound": tail, "slope0": cert.slope0, "slope_inf": cert.slope_inf}
    return CalculusReport(res.value, res.err + tail, "sector", details)


def resolvent_at_minus_one(A) -> np.ndarray:
    """``(I + A)^{-1}``."""
    A = as_matrix(A)
    return resolvent(-A, 1.0)


def phi_ee(f: FunctionSymbol, h: SectorialHandle, contour: Optional[ContourSpec] = None,
           tol: ToleranceConfig = DEFAULT_TOL) -> CalculusReport:
    """``Phi(e) + c I + d (I+A)^{-1}`` for ``f = e + c + d/(1+z)`` in E_e."""
    if IN_E in f.tags:
        return phi_elementary(f, h, contour, tol)
    if IN_EE not in f.tags:
        raise CertificateMissing(f"{f.name} is not tagged as a member of E_e")
    p = f.parts()
    n = h.n
    out = p.c * np.eye(n, dtype=complex)
    if p.d != 0:
        out = out + p.d * resolvent_at_minus_one(h.A)
    details = {"c": p.c, "d": p.d}
    err = 0.0
    if p.e_core is not None:
        rep = phi_elementary(p.e_core, h, contour, tol)
        out = out + rep.result
        err = rep.err_estimate
        details.update(rep.details)
    return CalculusReport(out, err, "sector", details)


def phi(f: FunctionSymbol, A, tol: ToleranceConfig = DEFAULT_TOL, delta: Optional[float] = None) -> np.ndarray:
    """Convenience wrapper: handle construction plus :func:`phi_ee`; returns the matrix."""
    h = A if isinstance(A, SectorialHandle) else make_handle(A, tol)
    contour = None if delta is None else ContourSpec(delta, 10.0)
    return phi_ee(f, h, contour, tol).result
