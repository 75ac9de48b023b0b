"""Measurable functional calculus of a normal matrix.

``Phi(f) = sum_i f(lambda_i) P_i`` over the distinct eigenvalues, with the
spectral projections taken from a complex Schur form (which is diagonal for a
normal matrix), so the ``P_i`` stay orthogonal under near-degeneracy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .errors import AxiomViolation, NotNormal, UndefinedAtEigenvalue
from .numlin import as_matrix, op_norm


@dataclass(frozen=True)
class NormalHandle:
    N: np.ndarray
    eigenvalues: np.ndarray
    projections: tuple

    @property
    def n(self) -> int:
        return self.N.shape[0]


def _cluster(values, gap):
    """Group indices whose values are chained within ``gap`` (single linkage)."""
    k = len(values)
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(k):
        for j in range(i + 1, k):
            if abs(values[i] - values[j]) <= gap:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(i)
    out = [sorted(g) for g in groups.values()]
    # rounding keeps the order stable when real parts differ only by noise
    out.sort(key=lambda g: (round(float(np.mean(values[g]).real), 10), round(float(np.mean(values[g]).imag), 10)))
    return out


def make_normal(N, normal_tol: float = 1e-10, gap_rel: float = 1e-8) -> NormalHandle:
    N = as_matrix(N)
    nrm = op_norm(N)
    if op_norm(N @ N.conj().T - N.conj().T @ N) > normal_tol * max(nrm ** 2, 1e-300):
        raise NotNormal("N N* != N* N")
    T, Z = scipy.linalg.schur(N, output="complex")
    d = np.diag(T)
    groups = _cluster(d, gap_rel * max(nrm, 1.0))
    lam = np.array([np.mean(d[g]) for g in groups])
    projs = tuple(Z[:, g] @ Z[:, g].conj().T for g in groups)
    h = NormalHandle(N, lam, projs)
    recon = sum(l * P for l, P in zip(lam, projs))
    if op_norm(recon - N) > 1e-9 * max(nrm, 1.0):
        raise NotNormal("spectral reconstruction failed")
    return h


def _values(f: Callable, h: NormalHandle) -> np.ndarray:
    with np.errstate(all="ignore"):
        v = np.asarray(f(h.eigenvalues), dtype=complex)
    v = np.broadcast_to(v, h.eigenvalues.shape)
    if not np.all(np.isfinite(v)):
        bad = h.eigenvalues[~np.isfinite(v)]
        raise UndefinedAtEigenvalue(f"function is not finite at eigenvalue(s) {bad}")
    return v


def _combine(vals, h: NormalHandle) -> np.ndarray:
    out = np.zeros((h.n, h.n), dtype=complex)
    for v, P in zip(vals, h.projections):
        out += v * P
    return out


def phi_borel(f: Callable, h: NormalHandle, check: bool = True, route_tol: float = 1e-10) -> np.ndarray:
    """``sum f(lambda_i) P_i``; also checks the route ``Phi(e)^-1 Phi(ef)`` with ``e = 1/(1+|f|)``."""
    v = _values(f, h)
    out = _combine(v, h)
    if check:
        e = 1.0 / (1.0 + np.abs(v))
        reg = np.linalg.solve(_combine(e, h), _combine(e * v, h))
        res = op_norm(reg - out)
        if res > route_tol * (1.0 + op_norm(out)):
            raise AxiomViolation("determination", res, {"route": "Phi(e)^-1 Phi(ef)"})
    return out


def regularized_route(f: Callable, h: NormalHandle) -> np.ndarray:
    v = _values(f, h)
    e = 1.0 / (1.0 + np.abs(v))
    return np.linalg.solve(_combine(e, h), _combine(e * v, h))


def conj_transpose(M):
    return M.conj().T


def mfc_axiom_suite(h: NormalHandle, samples, bp_sequences=(), tol: float = 1e-10,
                    bp_tol: float = 1e-8, adjoint: Callable = conj_transpose,
                    scalars=(2.0, -1.5j)) -> dict:
    """(MFC1)-(MFC4) as finite-dimensional equalities and (MFC5) in norm.

    ``samples`` is a list of ``(name, f)``; ``bp_sequences`` a list of
    ``(name, [f_1, f_2, ...], f)``.  Raises AxiomViolation on the first failure.
    """
    worst = {k: 0.0 for k in ("MFC1", "MFC2", "MFC3", "MFC4", "MFC5")}

    def record(ax, res, scale, payload):
        r = res / (1.0 + scale)
        worst[ax] = max(worst[ax], r)
        if r > (bp_tol if ax == "MFC5" else tol):
            raise AxiomViolation(ax, r, payload)

    I = np.eye(h.n)
    record("MFC1", op_norm(phi_borel(lambda z: np.ones_like(z), h) - I), 1.0, {"f": "1"})
    vals = {name: phi_borel(f, h) for name, f in samples}
    for name, f in samples:
        F = vals[name]
        for lam in scalars:
            record("MFC2", op_norm(lam * F - phi_borel(lambda z, f=f, lam=lam: lam * f(z), h)),
                   abs(lam) * op_norm(F), {"f": name, "lambda": lam})
        record("MFC4", op_norm(adjoint(F) - phi_borel(lambda z, f=f: np.conj(f(z)), h)),
               op_norm(F), {"f": name})
        for gname, g in samples:
            G = vals[gname]
            record("MFC2", op_norm(F + G - phi_borel(lambda z, f=f, g=g: f(z) + g(z), h)),
                   op_norm(F) + op_norm(G), {"f": name, "g": gname})
            record("MFC3", op_norm(F @ G - phi_borel(lambda z, f=f, g=g: f(z) * g(z), h)),
                   op_norm(F) * op_norm(G), {"f": name, "g": gname})
    for name, fns, f in bp_sequences:
        target = phi_borel(f, h)
        dists = [op_norm(phi_borel(fn, h) - target) for fn in fns]
        record("MFC5", dists[-1], op_norm(target), {"sequence": name, "distances": dists})
    return {"passed": True, "worst": worst, "worst_residual": max(worst.values())}


def approx_identity_suite(f: Callable, g: Callable, h: NormalHandle, ns=(1, 10, 100, 1000, 10000),
                          tol: float = 1e-10) -> dict:
    """``e_n = n/(n + |f| + |g|)``: ``Phi(e_n) -> I`` at rate ``max(|f|+|g|)/n`` and the closure identities."""
    fv, gv = _values(f, h), _values(g, h)
    a = np.abs(fv) + np.abs(gv)
    I = np.eye(h.n)
    rates = []
    for n in ns:
        En = phi_borel(lambda z, n=n: n / (n + np.abs(f(z)) + np.abs(g(z))), h)
        dist = op_norm(En - I)
        bound = float(a.max()) / n
        rates.append({"n": n, "distance": dist, "bound": bound})
        # e_n f and e_n g are bounded by n
        if float(np.max(np.abs(n / (n + a) * fv))) > n * (1 + 1e-12):
            raise AxiomViolation("approx_identity", float(np.max(np.abs(n / (n + a) * fv))), {"n": n})
    monotone = all(r2["distance"] <= r1["distance"] + 1e-15 for r1, r2 in zip(rates, rates[1:]))
    within = all(r["distance"] <= r["bound"] * (1 + 1e-9) + 1e-15 for r in rates)
    F, G = phi_borel(f, h), phi_borel(g, h)
    scale = 1.0 + op_norm(F) + op_norm(G) + op_norm(F) * op_norm(G)
    sum_res = op_norm(F + G - phi_borel(lambda z: f(z) + g(z), h)) / scale
    prod_res = op_norm(F @ G - phi_borel(lambda z: f(z) * g(z), h)) / scale
    passed = monotone and within and sum_res <= tol and prod_res <= tol
    return {"passed": passed, "rates": rates, "monotone": monotone, "within_bound": within,
            "sum_residual": sum_res, "product_residual": prod_res}


def composition_check(f: Callable, g: Callable, h: NormalHandle, tol: float = 1e-10) -> dict:
    """``(f o g)(N) = f(g(N))`` with ``g(N)`` re-diagonalised as a normal matrix."""
    lhs = phi_borel(lambda z: f(g(z)), h)
    gN = phi_borel(g, h)
    rhs = phi_borel(f, make_normal(gN))
    res = op_norm(lhs - rhs) / (1.0 + op_norm(lhs))
    return {"residual": res, "passed": res <= tol}


def random_normal(n: int, rng: np.random.Generator, spectrum: Optional[np.ndarray] = None) -> np.ndarray:
    """``Q diag(spectrum) Q*`` with a Haar-like random unitary ``Q``."""
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, R = np.linalg.qr(X)
    Q = Q * (np.diag(R) / np.abs(np.diag(R)))
    if spectrum is None:
        spectrum = rng.normal(size=n) + 1j * rng.normal(size=n)
    return Q @ np.diag(spectrum) @ Q.conj().T
