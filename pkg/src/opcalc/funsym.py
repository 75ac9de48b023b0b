"""Function symbols, measures and the scalar side of the subcalculi.

A :class:`FunctionSymbol` is an evaluable holomorphic (or merely pointwise)
function together with the sector it lives on and a small set of asserted
membership tags:

``InE``
    integrable decay at 0 and at infinity on every smaller sector,
``InEe``
    of the form ``e + c + d/(1+z)`` with ``e`` in ``E``; the decomposition is
    kept in ``ee_parts`` so the constant and resolvent parts can be handled
    exactly,
``Bounded``, ``HasLimitAtZero``
    self-explanatory.

Tags are asserted by the constructors and checked numerically (see
:func:`decay_certificate` and :func:`validate_ee_parts`); they are never
inferred from an arbitrary closure.

Branch convention: principal branch of ``log`` and powers, cut along the
negative real axis.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import quad
from .errors import CertificateMissing, DomainMismatch, QuadratureFailure
from .numlin import DEFAULT_TOL, ToleranceConfig

IN_E = "InE"
IN_EE = "InEe"
BOUNDED = "Bounded"
LIMIT_AT_ZERO = "HasLimitAtZero"


# -- domains ------------------------------------------------------------------


@dataclass(frozen=True)
class Sector:
    omega: float

    def __post_init__(self):
        if not 0 < self.omega <= math.pi:
            raise ValueError(f"sector angle must lie in (0, pi], got {self.omega}")


@dataclass(frozen=True)
class ClosedRightHalfPlane:
    pass


@dataclass(frozen=True)
class PointSet:
    points: tuple


# -- symbols -------------------------------------------------------------------


@dataclass(frozen=True)
class EeParts:
    """``f = e_core + c + d/(1+z)``; ``e_core`` is None for the zero function."""

    e_core: Optional["FunctionSymbol"]
    c: complex = 0.0
    d: complex = 0.0


@dataclass(frozen=True, eq=False)
class FunctionSymbol:
    func: Callable
    domain: object = field(default_factory=lambda: Sector(math.pi))
    tags: frozenset = frozenset()
    ee_parts: Optional[EeParts] = None
    name: str = "f"
    at_zero: Optional[complex] = None

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            vals = np.asarray(self.func(z), dtype=complex)
            vals = np.broadcast_to(vals, z.shape).copy()
        if self.at_zero is not None:
            vals[z == 0] = self.at_zero
        return vals

    @property
    def omega(self) -> float:
        if isinstance(self.domain, Sector):
            return self.domain.omega
        if isinstance(self.domain, ClosedRightHalfPlane):
            return math.pi / 2
        raise DomainMismatch(f"{self.name} is not defined on a sector")

    def parts(self) -> EeParts:
        """The E_e decomposition (an E symbol is its own core)."""
        if IN_E in self.tags:
            return EeParts(self, 0.0, 0.0)
        if self.ee_parts is None:
            raise CertificateMissing(f"{self.name} carries no E_e decomposition")
        return self.ee_parts

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        if isinstance(other, FunctionSymbol):
            return multiply(self, other)
        return scale(self, other)

    def __rmul__(self, other):
        return scale(self, other)

    def __neg__(self):
        return scale(self, -1.0)

    def __sub__(self, other):
        return add(self, scale(other, -1.0))

    def __repr__(self):
        return f"FunctionSymbol({self.name}, tags={sorted(self.tags)})"


def _common_domain(f, g):
    if isinstance(f.domain, Sector) and isinstance(g.domain, Sector):
        return Sector(min(f.omega, g.omega))
    return f.domain if f.domain == g.domain else Sector(min(f.omega, g.omega))


def _zero_limit(f, g, op):
    if f.at_zero is None or g.at_zero is None:
        return None
    return op(f.at_zero, g.at_zero)


def fmt_complex(c) -> str:
    c = complex(c)
    if c.imag == 0:
        return f"{c.real:g}"
    return f"({c.real:g}{c.imag:+g}j)" if c.real != 0 else f"{c.imag:g}j"


def _inv_1pz(z):
    return 1.0 / (1.0 + z)


def _q(z):
    return z / (1.0 + z) ** 2


def e_symbol(func, omega=math.pi, name="e", at_zero=0.0) -> FunctionSymbol:
    """A symbol asserted to belong to E(Sector(omega))."""
    return FunctionSymbol(func, Sector(omega), frozenset({IN_E, IN_EE, BOUNDED, LIMIT_AT_ZERO}),
                          None, name, at_zero)


def ee_symbol(func, core, c, d, omega=math.pi, name="f") -> FunctionSymbol:
    """A symbol asserted to equal ``core + c + d/(1+z)`` with ``core`` in E."""
    return FunctionSymbol(func, Sector(omega), frozenset({IN_EE, BOUNDED, LIMIT_AT_ZERO}),
                          EeParts(core, complex(c), complex(d)), name, complex(c + d))


def ee_from_limits(func, f0: complex, finf: complex, omega=math.pi, name="f") -> FunctionSymbol:
    """Wrap ``func`` as an E_e symbol given its limits at 0 and at infinity.

    The core ``func - finf - (f0 - finf)/(1+z)`` is asserted to lie in E; use
    :func:`decay_certificate` on ``f.parts().e_core`` to check the assertion.
    """
    c, d = complex(finf), complex(f0) - complex(finf)

    def core(z, func=func, c=c, d=d):
        return func(z) - c - d / (1.0 + z)

    return ee_symbol(func, e_symbol(core, omega, f"core[{name}]"), c, d, omega, name)


def plain_symbol(func, omega=math.pi, name="f", at_zero=None, tags=()) -> FunctionSymbol:
    """A symbol with no membership assertions (used for extension targets)."""
    return FunctionSymbol(func, Sector(omega), frozenset(tags), None, name, at_zero)


def constant(c: complex, omega=math.pi) -> FunctionSymbol:
    c = complex(c)
    return FunctionSymbol(lambda z, c=c: np.full(np.shape(z), c, dtype=complex), Sector(omega),
                          frozenset({IN_EE, BOUNDED, LIMIT_AT_ZERO}), EeParts(None, c, 0.0),
                          "1" if c == 1 else f"{c}", c)


def one(omega=math.pi) -> FunctionSymbol:
    return constant(1.0, omega)


def inv_1pz(omega=math.pi) -> FunctionSymbol:
    return FunctionSymbol(_inv_1pz, Sector(omega), frozenset({IN_EE, BOUNDED, LIMIT_AT_ZERO}),
                          EeParts(None, 0.0, 1.0), "1/(1+z)", 1.0)


def rational(j: int, k: int, lam: complex = 1.0) -> FunctionSymbol:
    """``z^j / (lam + z)^k`` with ``Re lam > 0``; tagged by its behaviour at 0 and infinity."""
    lam = complex(lam)
    if lam.real <= 0:
        raise ValueError("need Re lam > 0")
    omega = math.pi - abs(cmath.phase(lam))
    num = {0: "1", 1: "z"}.get(j, f"z^{j}")
    den = f"({fmt_complex(lam)}+z)" + ("" if k == 1 else f"^{k}")
    name = num if k == 0 else f"{num}/{den}"

    def func(z, j=j, k=k, lam=lam):
        # factored so that high powers neither overflow nor produce inf/inf
        w = 1.0 / (lam + z)
        if j <= k:
            return (z * w) ** j * w ** (k - j)
        return z ** (j - k) * (z * w) ** k

    if 1 <= j < k:
        return e_symbol(func, omega, name)
    if j > k:
        return plain_symbol(func, omega, name, at_zero=0.0)
    f0 = (1.0 / lam ** k) if j == 0 else 0.0
    finf = 1.0 if j == k else 0.0
    if j == 0 and k == 0:
        return constant(1.0, omega)
    if j == 0 and k == 1 and lam == 1:
        return inv_1pz(omega)
    return ee_from_limits(func, f0, finf, omega, name)


def regularizer(j: int, k: int) -> FunctionSymbol:
    """Member ``z^j/(1+z)^(j+k)`` of the regularizer search family."""
    return rational(j, j + k, 1.0)


def power(alpha: complex, omega=math.pi) -> FunctionSymbol:
    alpha = complex(alpha)
    at0 = 0.0 if alpha.real > 0 else None
    return plain_symbol(lambda z, a=alpha: z ** a, omega, f"z^{fmt_complex(alpha)}", at0)


def inverse_z(omega=math.pi) -> FunctionSymbol:
    return plain_symbol(lambda z: 1.0 / z, omega, "1/z")


def nollau(lam: complex) -> FunctionSymbol:
    """``1/(lam - log z)``.

    Holomorphic on the whole cut plane only when ``|Im lam| > pi``; for other
    values the function has a pole at ``exp(lam)`` inside every sector around
    the positive axis and the weighted resolvent representation fails.
    """
    lam = complex(lam)
    if abs(lam.imag) <= math.pi:
        raise DomainMismatch(f"nollau needs |Im lambda| > pi, got {lam}")
    return plain_symbol(lambda z, lam=lam: 1.0 / (lam - np.log(z)), math.pi,
                        f"nollau({fmt_complex(lam)})", at_zero=0.0)


def dungey() -> FunctionSymbol:
    """``(z - 1)/log z`` with the removable value 1 at z = 1."""

    def func(z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (z - 1.0) / np.log(z)
        near = np.abs(z - 1.0) < 1e-6
        w = z[near] - 1.0
        out[near] = 1.0 + w / 2 - w ** 2 / 12
        return out

    return plain_symbol(func, math.pi, "dungey", at_zero=0.0)


def exp_neg(lam: complex = 1.0) -> FunctionSymbol:
    """``exp(-lam z)`` as an E_e symbol on the sector where it decays."""
    lam = complex(lam)
    omega = math.pi / 2 - abs(cmath.phase(lam))
    if omega <= 0:
        raise DomainMismatch("exp(-lam z) needs |arg lam| < pi/2")
    return ee_from_limits(lambda z, lam=lam: np.exp(-lam * z), 1.0, 0.0, omega, f"exp(-{fmt_complex(lam)}z)")


# -- algebra --------------------------------------------------------------------


def scale(f: FunctionSymbol, c: complex) -> FunctionSymbol:
    c = complex(c)
    ee = None
    if f.ee_parts is not None:
        p = f.ee_parts
        ee = EeParts(None if p.e_core is None else scale(p.e_core, c), c * p.c, c * p.d)
    at0 = None if f.at_zero is None else c * f.at_zero
    return replace(f, func=lambda z, f=f, c=c: c * f(z), ee_parts=ee,
                   name=f"{fmt_complex(c)}({f.name})", at_zero=at0)


def _add_core(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return add(a, b)


def add(f: FunctionSymbol, g: FunctionSymbol) -> FunctionSymbol:
    dom = _common_domain(f, g)
    tags = set()
    ee = None
    if IN_E in f.tags and IN_E in g.tags:
        tags |= {IN_E, IN_EE}
    elif IN_EE in f.tags and IN_EE in g.tags:
        tags.add(IN_EE)
        p, q = f.parts(), g.parts()
        ee = EeParts(_add_core(p.e_core, q.e_core), p.c + q.c, p.d + q.d)
    if BOUNDED in f.tags and BOUNDED in g.tags:
        tags.add(BOUNDED)
    at0 = _zero_limit(f, g, lambda a, b: a + b)
    if at0 is not None:
        tags.add(LIMIT_AT_ZERO)
    return FunctionSymbol(lambda z, f=f, g=g: f(z) + g(z), dom, frozenset(tags), ee,
                          f"({f.name})+({g.name})", at0)


def _mul_core(f: FunctionSymbol, g: FunctionSymbol, dom) -> Optional[FunctionSymbol]:
    """Core of the product of two E_e symbols, using ``1/(1+z)^2 = 1/(1+z) - z/(1+z)^2``."""
    p, q = f.parts(), g.parts()
    e1, c1, d1 = p.e_core, p.c, p.d
    e2, c2, d2 = q.e_core, q.c, q.d
    if e1 is None and e2 is None and d1 * d2 == 0:
        return None

    def core(z):
        r = _inv_1pz(z)
        out = -d1 * d2 * _q(z)
        if e1 is not None:
            v1 = e1(z)
            out = out + v1 * (c2 + d2 * r)
            if e2 is not None:
                out = out + v1 * e2(z)
        if e2 is not None:
            out = out + e2(z) * (c1 + d1 * r)
        return out

    return e_symbol(core, dom.omega, f"core[({f.name})*({g.name})]")


def multiply(f: FunctionSymbol, g: FunctionSymbol) -> FunctionSymbol:
    dom = _common_domain(f, g)
    tags = set()
    ee = None
    func = lambda z, f=f, g=g: f(z) * g(z)  # noqa: E731
    name = f"({f.name})*({g.name})"
    e_f, e_g = IN_E in f.tags, IN_E in g.tags
    if (e_f and (e_g or IN_EE in g.tags or BOUNDED in g.tags)) or (e_g and (IN_EE in f.tags or BOUNDED in f.tags)):
        # E is an ideal in the bounded holomorphic functions
        tags |= {IN_E, IN_EE}
    elif IN_EE in f.tags and IN_EE in g.tags:
        tags.add(IN_EE)
        p, q = f.parts(), g.parts()
        ee = EeParts(_mul_core(f, g, dom), p.c * q.c, p.c * q.d + q.c * p.d + p.d * q.d)
    if BOUNDED in f.tags and BOUNDED in g.tags:
        tags.add(BOUNDED)
    at0 = _zero_limit(f, g, lambda a, b: a * b)
    if at0 is not None:
        tags.add(LIMIT_AT_ZERO)
    return FunctionSymbol(func, dom, frozenset(tags), ee, name, at0)


# -- certificates ------------------------------------------------------------------

_SAMPLE_R = np.logspace(-12, 12, 241)


@dataclass(frozen=True)
class DecayCertificate:
    certified: bool
    reason: str
    slope0: float
    slope_inf: float
    radii: np.ndarray
    magnitudes: np.ndarray  # max over both rays of |f| at each radius

    def __bool__(self):
        return self.certified


def _slope(r, m):
    if np.all(m == 0):
        return math.inf
    if np.any(m == 0):
        # underflow inside the window: faster than any power
        return math.inf
    return float(np.polyfit(np.log(r), np.log(m), 1)[0])


def decay_certificate(f: FunctionSymbol, delta: float, eps: float = 0.05) -> DecayCertificate:
    """Probe ``|f|`` on the rays ``arg z = +-delta`` for power decay at 0 and infinity.

    Certified iff a log-log regression over the outer two decades of the sample
    range ``[1e-12, 1e12]`` gives slope ``>= eps`` at 0 and ``<= -eps`` at infinity.
    """
    if not isinstance(f.domain, Sector):
        raise DomainMismatch(f"{f.name} is not a sector symbol")
    if not 0 <= delta < f.omega:
        raise DomainMismatch(f"delta={delta:.4g} outside [0, {f.omega:.4g}) for {f.name}")
    r = _SAMPLE_R
    up = np.abs(f(r * np.exp(1j * delta)))
    lo = np.abs(f(r * np.exp(-1j * delta)))
    mag = np.maximum(up, lo)
    if not np.all(np.isfinite(mag)):
        return DecayCertificate(False, "non-finite values on the probe rays", math.nan, math.nan, r, mag)
    peak = float(mag.max())
    if peak == 0.0:
        return DecayCertificate(True, "identically zero", math.inf, -math.inf, r, mag)
    # values at rounding level relative to the peak carry no decay information
    mag = np.where(mag <= 1e-14 * peak, 0.0, mag)
    near = r <= 1e-10
    far = r >= 1e10
    s0 = _slope(r[near], mag[near])
    sinf = -_slope(1.0 / r[far], mag[far])
    if s0 < eps:
        return DecayCertificate(False, f"slope {s0:.3g} at 0 below {eps}", s0, sinf, r, mag)
    if sinf > -eps:
        return DecayCertificate(False, f"slope {sinf:.3g} at infinity above {-eps}", s0, sinf, r, mag)
    return DecayCertificate(True, "ok", s0, sinf, r, mag)


def validate_ee_parts(f: FunctionSymbol, delta: Optional[float] = None, npts: int = 200) -> float:
    """Max of ``|f - (e + c + d/(1+z))| / (1 + |f|)`` on log-spaced ray points."""
    p = f.parts()
    if delta is None:
        delta = f.omega / 2
    r = np.logspace(-6, 6, npts // 2)
    z = np.concatenate([r * np.exp(1j * delta), r * np.exp(-1j * delta)])
    fz = f(z)
    rec = p.c + p.d / (1.0 + z)
    if p.e_core is not None:
        rec = rec + p.e_core(z)
    return float(np.max(np.abs(fz - rec) / (1.0 + np.abs(fz))))


# -- measures ------------------------------------------------------------------------


@dataclass(frozen=True)
class RealHalfLine:
    pass


@dataclass(frozen=True)
class ClosedSector:
    phi: float


@dataclass(frozen=True, eq=False)
class MeasureRep:
    """Complex measure = finite atom list + optional absolutely continuous part.

    ``density(t)`` is the density w.r.t. ``dt`` along the ray ``t * exp(i*ray_angle)``,
    ``t`` in ``window``.  ``log_tails(side, U, p)`` (optional) returns
    ``int rho(e^u) e^(p u) du`` over ``u > U`` (side=+1) or ``u < -U`` (side=-1);
    measures whose densities decay only logarithmically need it.
    """

    atoms: tuple = ()
    density: Optional[Callable] = None
    window: tuple = (0.0, math.inf)
    support: object = field(default_factory=RealHalfLine)
    ray_angle: float = 0.0
    tv_bound: float = 0.0
    log_tails: Optional[Callable] = None
    name: str = "mu"
    spec: Optional[dict] = None

    def __post_init__(self):
        phi = self.support.phi if isinstance(self.support, ClosedSector) else 0.0
        for loc, w in self.atoms:
            if abs(cmath.phase(loc)) > phi + 1e-12 and loc != 0:
                raise ValueError(f"atom at {loc} outside the declared support")
        if abs(self.ray_angle) > phi + 1e-12:
            raise ValueError("density ray outside the declared support")
        atom_mass = sum(abs(w) for _, w in self.atoms)
        if self.tv_bound < atom_mass - 1e-12:
            object.__setattr__(self, "tv_bound", atom_mass)

    @property
    def atom_mass(self) -> complex:
        return sum((w for _, w in self.atoms), 0j)

    def points(self, t):
        return np.asarray(t) * np.exp(1j * self.ray_angle)


def _density_tv(density, window) -> float:
    a, b = window
    lo = math.log(a) if a > 0 else -60.0
    hi = math.log(b) if math.isfinite(b) else 8.0
    res = quad.integrate(lambda u: np.abs(density(np.exp(u))) * np.exp(u), lo, hi, 1e-8)
    return float(res.value)


def dirac(loc: complex = 0.0, weight: complex = 1.0) -> MeasureRep:
    loc = complex(loc)
    sup = RealHalfLine() if loc.imag == 0 and loc.real >= 0 else ClosedSector(abs(cmath.phase(loc)))
    return MeasureRep(atoms=((loc, complex(weight)),), support=sup, tv_bound=abs(weight),
                      name=f"{weight:g}*delta_{loc:g}",
                      spec={"atoms": [[loc.real, loc.imag, complex(weight).real, complex(weight).imag]]})


def atomic(atoms, support=None) -> MeasureRep:
    atoms = tuple((complex(l), complex(w)) for l, w in atoms)
    if support is None:
        phi = max([abs(cmath.phase(l)) for l, _ in atoms if l != 0] + [0.0])
        support = RealHalfLine() if phi == 0 else ClosedSector(phi)
    return MeasureRep(atoms=atoms, support=support, tv_bound=sum(abs(w) for _, w in atoms),
                      name="atomic", spec={"atoms": [[l.real, l.imag, w.real, w.imag] for l, w in atoms]})


def zero_measure() -> MeasureRep:
    return MeasureRep(name="0", spec={"atoms": []})


def exp_decay(rate: float = 1.0, weight: complex = 1.0, window=(0.0, math.inf)) -> MeasureRep:
    """``weight * exp(-rate s) ds``."""
    rate, weight = float(rate), complex(weight)
    dens = lambda t, r=rate, c=weight: c * np.exp(-r * np.asarray(t))  # noqa: E731
    a, b = window
    tv = abs(weight) * (math.exp(-rate * a) - (math.exp(-rate * b) if math.isfinite(b) else 0.0)) / rate
    return MeasureRep(density=dens, window=tuple(window), tv_bound=tv, name=f"exp_decay({rate:g})",
                      spec={"density": {"name": "exp_decay", "rate": rate, "weight": [weight.real, weight.imag]},
                            "window": list(window)})


def power_exp(p: float, rate: float = 1.0, weight: complex = 1.0) -> MeasureRep:
    """``weight * s^p exp(-rate s) ds`` (so its Laplace transform is ``weight*Gamma(p+1)/(rate+z)^(p+1)``)."""
    p, rate, weight = float(p), float(rate), complex(weight)
    dens = lambda t, p=p, r=rate, c=weight: c * np.asarray(t) ** p * np.exp(-r * np.asarray(t))  # noqa: E731
    tv = abs(weight) * math.gamma(p + 1) / rate ** (p + 1)
    return MeasureRep(density=dens, tv_bound=tv, name=f"power({p:g},{rate:g})",
                      spec={"density": {"name": "power", "p": p, "rate": rate,
                                        "weight": [weight.real, weight.imag]}, "window": [0, None]})


def density_measure(density: Callable, window=(0.0, math.inf), name: str = "density",
                    tv_bound: Optional[float] = None, spec: Optional[dict] = None) -> MeasureRep:
    """A measure with a user supplied density on ``window`` (tv bound computed if not given)."""
    if tv_bound is None:
        tv_bound = _density_tv(density, tuple(window))
    return MeasureRep(density=density, window=tuple(window), tv_bound=tv_bound, name=name, spec=spec)


def _arctan_tail(lam: complex, U: float, side: int) -> complex:
    """``int du / ((lam - u)^2 + pi^2)`` over ``u > U`` (side=+1) or ``u < -U`` (side=-1)."""
    x = (U - lam) / math.pi if side > 0 else (U + lam) / math.pi
    return (math.pi / 2 - complex(np.arctan(x))) / math.pi


def nollau_weight(lam: complex) -> MeasureRep:
    """``-dt / ((lam - log t)^2 + pi^2)``: the weight of the Nollau resolvent integral."""
    lam = complex(lam)
    if abs(lam.imag) <= math.pi:
        raise DomainMismatch(f"nollau weight needs |Im lambda| > pi, got {lam}")

    def dens(t, lam=lam):
        return -1.0 / ((lam - np.log(np.asarray(t))) ** 2 + math.pi ** 2)

    def tails(side, U, p, lam=lam):
        if p != 0:
            if side < 0:
                return 0.0  # exponentially small for p = 1
            raise ValueError("nollau weight has no finite tail with p=1 at +infinity")
        return -_arctan_tail(lam, U, side)

    return MeasureRep(density=dens, tv_bound=math.inf, log_tails=tails, name=f"nollau({fmt_complex(lam)})",
                      spec={"density": {"name": "nollau", "lambda": [lam.real, lam.imag]},
                            "window": [0, None]})


def dungey_weight() -> MeasureRep:
    """``(1+t) / (t (log^2 t + pi^2)) dt``: with kernel ``z/(t+z)`` it integrates to ``(z-1)/log z``."""

    def dens(t):
        t = np.asarray(t)
        return (1.0 + t) / (t * (np.log(t) ** 2 + math.pi ** 2))

    def tails(side, U, p):
        # rho(e^u) e^(p u) = (e^(-u) + 1) e^(p u) / (u^2 + pi^2)
        if (side > 0 and p == 0) or (side < 0 and p == 1):
            return _arctan_tail(0.0, U, side)
        raise ValueError("dungey weight tail diverges for this power")

    return MeasureRep(density=dens, tv_bound=math.inf, log_tails=tails, name="dungey",
                      spec={"density": {"name": "dungey"}, "window": [0, None]})


def restrict(mu: MeasureRep, lo: float, hi: float, closed_lo=True, closed_hi=True) -> MeasureRep:
    """Restriction to the interval between ``lo`` and ``hi`` (moduli of atom locations)."""

    def keep(loc):
        r = abs(loc)
        return (r > lo or (closed_lo and r == lo)) and (r < hi or (closed_hi and r == hi))

    atoms = tuple((l, w) for l, w in mu.atoms if keep(l))
    density, window = None, (0.0, 0.0)
    if mu.density is not None:
        a, b = max(mu.window[0], lo), min(mu.window[1], hi)
        if b > a:
            density, window = mu.density, (a, b)
    tv = sum(abs(w) for _, w in atoms)
    if density is not None:
        tv += mu.tv_bound if not math.isfinite(mu.tv_bound) else min(mu.tv_bound, _density_tv(density, window))
    return replace(mu, atoms=atoms, density=density, window=window, tv_bound=tv,
                   name=f"{mu.name}|[{lo:g},{hi:g}]", spec=None)


def reweight(mu: MeasureRep, g: Callable, name: str = "g") -> MeasureRep:
    """The measure ``g(t) mu(dt)`` (atoms reweighted, density multiplied)."""
    atoms = tuple((l, complex(w * g(l))) for l, w in mu.atoms)
    density = None
    tv = sum(abs(w) for _, w in atoms)
    if mu.density is not None:
        density = lambda t, d=mu.density, g=g: g(np.asarray(t)) * d(t)  # noqa: E731
        tv += _density_tv(density, mu.window)
    return replace(mu, atoms=atoms, density=density, tv_bound=tv, log_tails=None,
                   name=f"{name}*{mu.name}", spec=None)


def scale_measure(mu: MeasureRep, c: complex) -> MeasureRep:
    c = complex(c)
    atoms = tuple((l, c * w) for l, w in mu.atoms)
    density = None if mu.density is None else (lambda t, d=mu.density, c=c: c * d(t))
    tails = None if mu.log_tails is None else (lambda s, U, p, f=mu.log_tails, c=c: c * f(s, U, p))
    return replace(mu, atoms=atoms, density=density, tv_bound=abs(c) * mu.tv_bound,
                   log_tails=tails, name=f"{c:g}*{mu.name}", spec=None)


def convolve(mu: MeasureRep, nu: MeasureRep) -> MeasureRep:
    """Convolution on the half line; density x density is not supported."""
    if mu.density is not None and nu.density is not None:
        raise NotImplementedError("density x density convolution is out of scope")
    if mu.density is not None:
        mu, nu = nu, mu
    atoms = {}
    for l1, w1 in mu.atoms:
        for l2, w2 in nu.atoms:
            atoms[l1 + l2] = atoms.get(l1 + l2, 0) + w1 * w2
    out = MeasureRep(atoms=tuple(sorted(atoms.items(), key=lambda a: (a[0].real, a[0].imag))),
                     tv_bound=mu.tv_bound * nu.tv_bound, name=f"{mu.name}*{nu.name}")
    if nu.density is None:
        return out
    if any(l.imag != 0 for l, _ in mu.atoms):
        raise NotImplementedError("atom x density convolution needs real atom locations")
    shifts = tuple((l.real, w) for l, w in mu.atoms)
    a, b = nu.window

    def dens(t, shifts=shifts, d=nu.density, a=a, b=b):
        t = np.asarray(t, dtype=float)
        acc = np.zeros(t.shape, dtype=complex)
        for s, w in shifts:
            x = t - s
            ok = (x > a) & (x < b)
            acc[ok] += w * d(x[ok])
        return acc

    lo = a + min((s for s, _ in shifts), default=0.0)
    return replace(out, density=dens, window=(lo, math.inf), tv_bound=mu.tv_bound * nu.tv_bound)


# -- half-line integration in log coordinates ---------------------------------------

TAIL_U = 40.0
MAX_U = 700.0


@dataclass(frozen=True)
class DensityIntegral:
    value: np.ndarray
    err: float
    tail: float
    nodes: int


def integrate_density(mu: MeasureRep, kernel: Callable, rel_tol: float,
                      kernel_decay=(0, 0), h0: float = 0.5) -> DensityIntegral:
    """``int kernel(lambda) rho(t) dt`` with ``lambda = t e^{i ray_angle}``, in ``u = log t``.

    ``kernel_decay = (k_minus, k_plus)``: the kernel behaves like ``t^(-k)`` at the
    corresponding end.  When the measure supplies ``log_tails`` the open ends are cut
    at ``|u| = TAIL_U`` and the tails are added in closed form as
    ``tail_mass * t^k kernel(lambda)`` evaluated at the cut (``tail`` is then the
    drift of that frozen factor further out); otherwise the window
    is widened shell by shell until a shell contributes below tolerance.
    """
    if mu.density is None:
        return DensityIntegral(np.asarray(0j), 0.0, 0.0, 0)
    a, b = mu.window
    lo_open, hi_open = a <= 0, not math.isfinite(b)
    rot = np.exp(1j * mu.ray_angle)

    def F(u):
        t = np.exp(u)
        vals = np.asarray(kernel(t * rot))
        w = mu.density(t) * t
        return w.reshape((-1,) + (1,) * (vals.ndim - 1)) * vals

    nodes = 0
    if mu.log_tails is not None and (lo_open or hi_open):
        lo = -TAIL_U if lo_open else math.log(a)
        hi = TAIL_U if hi_open else math.log(b)
        res = quad.integrate(F, lo, hi, rel_tol, h0)
        total, err, nodes = res.value, res.err, res.nodes
        tail = 0.0
        for side, open_, k in ((-1, lo_open, kernel_decay[0]), (+1, hi_open, kernel_decay[1])):
            if not open_:
                continue
            U = TAIL_U
            t = math.exp(side * U)
            mass = mu.log_tails(side, U, 1 - k)
            frozen = t ** k * np.asarray(kernel(np.array([t * rot])))[0]
            piece = mass * frozen
            total = total + piece
            # the tail model freezes t^k K(t) at the cut; bound its drift further out
            t2 = math.exp(side * (U + 8.0))
            drift = t2 ** k * np.asarray(kernel(np.array([t2 * rot])))[0] - frozen
            tail = max(tail, abs(mass) * float(np.max(np.abs(drift))))
        return DensityIntegral(total, err, tail, nodes)

    lo = math.log(a) if not lo_open else -8.0
    hi = math.log(b) if not hi_open else 8.0
    res = quad.integrate(F, lo, hi, rel_tol, h0)
    total, err, nodes = res.value, res.err, res.nodes
    last_shell = 0.0
    for side, open_ in ((-1, lo_open), (+1, hi_open)):
        if not open_:
            continue
        edge = lo if side < 0 else hi
        width = 8.0
        while True:
            nxt = edge + side * width
            if abs(nxt) > MAX_U:
                raise QuadratureFailure(f"density integral has not settled at |u| = {MAX_U}")
            s_lo, s_hi = (nxt, edge) if side < 0 else (edge, nxt)
            shell = quad.integrate(F, s_lo, s_hi, rel_tol, h0)
            total = total + shell.value
            err += shell.err
            nodes += shell.nodes
            size = float(np.max(np.abs(shell.value)))
            last_shell = max(last_shell, size) if abs(edge) < 9 else size
            if size <= rel_tol * (1.0 + float(np.max(np.abs(total)))):
                break
            edge, width = nxt, 2 * width
    return DensityIntegral(total, err, last_shell, nodes)


def integrate_measure(mu: MeasureRep, kernel: Callable, rel_tol: float, kernel_decay=(0, 0)):
    """Atoms summed exactly plus the density integral; returns (value, err, tail, nodes)."""
    acc = None
    for loc, w in mu.atoms:
        term = w * np.asarray(kernel(np.array([loc])))[0]
        acc = term if acc is None else acc + term
    d = integrate_density(mu, kernel, rel_tol, kernel_decay)
    if mu.density is not None:
        acc = d.value if acc is None else acc + d.value
    if acc is None:
        acc = np.asarray(kernel(np.array([1.0])))[0] * 0
    return acc, d.err, d.tail, d.nodes


# -- scalar transforms ---------------------------------------------------------------


def laplace_transform(mu: MeasureRep, z: complex, tol: ToleranceConfig = DEFAULT_TOL) -> complex:
    """``L mu(z) = int exp(-z s) mu(ds)`` for ``Re z >= 0``."""
    z = complex(z)
    if z.real < 0:
        raise DomainMismatch("Laplace transform needs Re z >= 0")
    val, err, tail, _ = integrate_measure(mu, lambda s: np.exp(-z * s), tol.quad_rel_tol)
    bound = tol.quad_rel_tol * max(mu.tv_bound, 1.0)
    if err + tail > 10 * bound and math.isfinite(mu.tv_bound):
        raise QuadratureFailure(f"Laplace quadrature error {err + tail:.2e} exceeds {bound:.2e}")
    return complex(val)


@dataclass(frozen=True)
class StieltjesRep:
    """``f(z) = int mu(ds) / (1 + s z)^m``."""

    m: int
    mu: MeasureRep

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("m must be >= 0")


@dataclass(frozen=True)
class HirschRep:
    """``f(z) = a + int z/(1 + z t) nu(dt)`` with ``int |nu|(dt)/(1+t) < inf``."""

    a: complex
    nu: MeasureRep
    weighted_tv: Optional[float] = None

    def certificate(self) -> float:
        if self.weighted_tv is not None:
            return self.weighted_tv
        tv = sum(abs(w) / (1 + abs(l)) for l, w in self.nu.atoms)
        if self.nu.density is not None:
            tv += _density_tv(lambda t: self.nu.density(t) / (1 + np.asarray(t)), self.nu.window)
        return tv


@dataclass(frozen=True)
class HPSymbol:
    """Element ``L mu`` of the Hille-Phillips algebra."""

    mu: MeasureRep

    def __call__(self, z):
        return laplace_transform(self.mu, z)

    def symbol(self) -> FunctionSymbol:
        return FunctionSymbol(np.vectorize(lambda z: laplace_transform(self.mu, z), otypes=[complex]),
                              ClosedRightHalfPlane(), frozenset({BOUNDED}), None, f"L[{self.mu.name}]")


def stieltjes_eval(f: StieltjesRep, z, tol: ToleranceConfig = DEFAULT_TOL):
    """Pointwise value of a Stieltjes function; ``z`` may be an array."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    m = f.m
    val, _, _, _ = integrate_measure(
        f.mu, lambda s: (1.0 + s[:, None] * z[None, :]) ** (-m), tol.quad_rel_tol, kernel_decay=(0, 0))
    val = np.asarray(val)
    return complex(val[0]) if val.size == 1 else val


def stieltjes_symbol(f: StieltjesRep, omega: float = math.pi * 0.99, name="stieltjes") -> FunctionSymbol:
    """Bounded holomorphic symbol of a Stieltjes function (no E_e assertion)."""
    return plain_symbol(lambda z, f=f: stieltjes_eval(f, z), omega, name,
                        at_zero=complex(f.mu.atom_mass + (0 if f.mu.density is None else
                                                           integrate_measure(f.mu, lambda s: np.ones_like(s), 1e-12)[0])),
                        tags=(BOUNDED, LIMIT_AT_ZERO))


def hirsch_split(f: HirschRep):
    """``f = a + z g(z) + h(z)`` with ``g``, ``h`` bounded Stieltjes functions (m = 1).

    ``g`` integrates ``nu`` over ``[0, 1]``; ``h`` is the constant
    ``int_(1,inf) nu(dt)/t`` (an atom at 0) minus the Stieltjes function of
    ``nu(dt)/t`` on ``(1, inf)``.
    """
    if not math.isfinite(f.certificate()):
        raise CertificateMissing("Hirsch measure fails the (1+t)^-1 weighted variation bound")
    g = StieltjesRep(1, restrict(f.nu, 0.0, 1.0))
    upper = restrict(f.nu, 1.0, math.inf, closed_lo=False)
    over_t = reweight(upper, lambda t: 1.0 / t, "1/t")
    const = over_t.atom_mass
    if over_t.density is not None:
        const += integrate_measure(over_t, lambda s: np.ones_like(s, dtype=complex), 1e-13)[0]
    neg = scale_measure(over_t, -1.0)
    h_mu = replace(neg, atoms=((0j, complex(const)),) + neg.atoms,
                   tv_bound=neg.tv_bound + abs(const), name="hirsch_h")
    return complex(f.a), g, StieltjesRep(1, h_mu)


def hirsch_eval(f: HirschRep, z, tol: ToleranceConfig = DEFAULT_TOL):
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    val, _, _, _ = integrate_measure(
        f.nu, lambda t: z[None, :] / (1.0 + z[None, :] * t[:, None]), tol.quad_rel_tol, kernel_decay=(0, 1))
    out = f.a + np.asarray(val)
    return complex(out[0]) if out.size == 1 else out
