"""Dense complex linear algebra kernel.

Everything here works on small dense complex matrices (``dim <= 64``) and uses
spectral (2-)norms throughout.  Rank decisions are made with an explicit
singular-value cutoff relative to the largest singular value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NotDiagonalizable, SingularShift


@dataclass(frozen=True)
class ToleranceConfig:
    rank_rel_tol: float = 1e-9
    solve_rel_tol: float = 1e-10
    quad_rel_tol: float = 1e-10
    norm_abs_floor: float = 1e-14

    def __post_init__(self):
        for name in ("rank_rel_tol", "solve_rel_tol", "quad_rel_tol", "norm_abs_floor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.rank_rel_tol >= 1:
            raise ValueError("rank_rel_tol must be < 1")


DEFAULT_TOL = ToleranceConfig()


def as_matrix(A) -> np.ndarray:
    """Coerce ``A`` to a finite square complex array."""
    M = np.atleast_2d(np.asarray(A, dtype=complex))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


@dataclass(frozen=True)
class Subspace:
    """Orthonormal column basis of a subspace of C^ambient_dim."""

    ambient_dim: int
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def contains(self, vectors, tol: float = 1e-9) -> bool:
        return containment_residual(vectors, self) <= tol

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(n, np.eye(n, dtype=complex))

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(n, np.zeros((n, 0), dtype=complex))


def op_norm(M) -> float:
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def orth(M, tol: ToleranceConfig = DEFAULT_TOL) -> Subspace:
    """Orthonormal basis of the column space of ``M`` (rank by relative cutoff)."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    if M.shape[1] == 0:
        return Subspace.zero(n)
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] <= tol.norm_abs_floor:
        return Subspace.zero(n)
    rank = int(np.sum(s > tol.rank_rel_tol * s[0]))
    return Subspace(n, U[:, :rank])


def nullspace(M, tol: ToleranceConfig = DEFAULT_TOL) -> Subspace:
    """Orthonormal basis of ``{x : |Mx| <= rank_rel_tol * smax(M) * |x|}``.

    ``M`` may be rectangular (e.g. several square blocks stacked vertically).
    The zero matrix returns the full space.
    """
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    n = M.shape[1]
    if M.shape[0] == 0:
        return Subspace.full(n)
    _, s, Vh = np.linalg.svd(M, full_matrices=True)
    smax = s[0] if s.size else 0.0
    if smax <= tol.norm_abs_floor:
        return Subspace.full(n)
    rank = int(np.sum(s > tol.rank_rel_tol * smax))
    return Subspace(n, Vh[rank:].conj().T)


def subspace_intersect(spaces, tol: ToleranceConfig = DEFAULT_TOL) -> Subspace:
    """Intersection of a list of subspaces of the same ambient space."""
    spaces = list(spaces)
    if not spaces:
        raise ValueError("need at least one subspace")
    n = spaces[0].ambient_dim
    blocks = [np.eye(n) - S.projector() for S in spaces]
    return nullspace(np.vstack(blocks), tol)


def subspace_sum(spaces, tol: ToleranceConfig = DEFAULT_TOL) -> Subspace:
    spaces = list(spaces)
    n = spaces[0].ambient_dim
    return orth(np.hstack([S.basis for S in spaces] + [np.zeros((n, 0))]), tol)


def containment_residual(vectors, S: Subspace) -> float:
    """Largest relative distance of the columns of ``vectors`` from ``S``."""
    if isinstance(vectors, Subspace):
        vectors = vectors.basis
    V = np.asarray(vectors, dtype=complex)
    if V.size == 0:
        return 0.0
    scale = max(op_norm(V), 1e-300)
    return op_norm(V - S.basis @ (S.basis.conj().T @ V)) / scale


def subspace_gap(S1: Subspace, S2: Subspace) -> float:
    """Gap ``|P1 - P2|``: the sine of the largest principal angle, 1 if dims differ."""
    if S1.dim != S2.dim:
        return 1.0
    if S1.dim == 0:
        return 0.0
    return op_norm(S1.projector() - S2.projector())


def principal_angles(S1: Subspace, S2: Subspace) -> np.ndarray:
    if S1.dim == 0 or S2.dim == 0:
        return np.zeros(0)
    return scipy.linalg.subspace_angles(S1.basis, S2.basis)


# -- resolvents ---------------------------------------------------------------


def resolvent(A, z: complex, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """``(zI - A)^{-1}``; raises SingularShift when z is numerically in the spectrum."""
    A = as_matrix(A)
    n = A.shape[0]
    M = z * np.eye(n) - A
    s = np.linalg.svd(M, compute_uv=False)
    scale = max(abs(z), op_norm(A), 1.0)
    if s[-1] <= tol.rank_rel_tol * scale:
        raise SingularShift(f"z={z!r} is within tolerance of the spectrum")
    lu = scipy.linalg.lu_factor(M)
    return scipy.linalg.lu_solve(lu, np.eye(n, dtype=complex))


def resolvents(A, zs) -> np.ndarray:
    """Stack of ``(z_k I - A)^{-1}`` for an array of shifts; shape ``(N, n, n)``.

    No conditioning check: callers place the shifts away from the spectrum.
    """
    A = np.asarray(A, dtype=complex)
    zs = np.asarray(zs, dtype=complex).ravel()
    n = A.shape[0]
    M = zs[:, None, None] * np.eye(n)[None] - A[None]
    return np.linalg.inv(M)


# -- eigen oracle ---------------------------------------------------------------


@dataclass(frozen=True)
class EigenOracle:
    eigenvalues: np.ndarray
    V: np.ndarray
    cond: float

    def apply(self, values) -> np.ndarray:
        """``V diag(values) V^{-1}``."""
        values = np.asarray(values, dtype=complex)
        return self.V @ (values[:, None] * np.linalg.solve(self.V, np.eye(len(values))))

    def function(self, f) -> np.ndarray:
        return self.apply(np.asarray(f(self.eigenvalues), dtype=complex))


def eig_oracle(A, max_cond: float = 1e8) -> EigenOracle:
    """Eigendecomposition used as an independent check of the engines.

    Eigenvalues are sorted by (real, imag); eigenvector columns have unit norm.
    """
    A = as_matrix(A)
    lam, V = scipy.linalg.eig(A)
    order = np.lexsort((lam.imag, lam.real))
    lam, V = lam[order], V[:, order]
    V = V / np.linalg.norm(V, axis=0, keepdims=True)
    cond = float(np.linalg.cond(V))
    if not np.isfinite(cond) or cond > max_cond:
        raise NotDiagonalizable(f"eigenvector condition {cond:.3e} exceeds {max_cond:.1e}")
    return EigenOracle(lam, V, cond)


def oracle_function(A, f, max_cond: float = 1e8) -> np.ndarray:
    return eig_oracle(A, max_cond).function(f)


# -- matrix exponential -----------------------------------------------------------

# Pade scaling-and-squaring thresholds for degrees 3, 5, 7, 9, 13 (Higham 2005).
_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1, 7: 9.504178996162932e-1,
          9: 2.097847961257068e0, 13: 5.371920351148152e0}


def _pade_coefficients(m: int) -> list[float]:
    f = math.factorial
    return [f(2 * m - j) * f(m) / (f(2 * m) * f(j) * f(m - j)) for j in range(m + 1)]


_PADE = {m: _pade_coefficients(m) for m in _THETA}


def _pade_uv(A: np.ndarray, m: int):
    b = _PADE[m]
    n = A.shape[-1]
    ident = np.broadcast_to(np.eye(n, dtype=complex), A.shape)
    A2 = A @ A
    if m == 13:
        A4 = A2 @ A2
        A6 = A4 @ A2
        U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
                 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
        V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
             + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
        return U, V
    powers = [ident, A2]
    while len(powers) < m // 2 + 1:
        powers.append(powers[-1] @ A2)
    U = A @ sum(b[2 * k + 1] * powers[k] for k in range(m // 2 + 1))
    V = sum(b[2 * k] * powers[k] for k in range(m // 2 + 1))
    return U, V


def matrix_exp(A) -> np.ndarray:
    """Matrix exponential by Pade scaling and squaring.

    Accepts a single ``(n, n)`` matrix or a stack ``(N, n, n)``; for a stack the
    scaling exponent is chosen per matrix.
    """
    A = np.asarray(A, dtype=complex)
    single = A.ndim == 2
    if single:
        A = A[None]
    norms = np.abs(A).sum(axis=-2).max(axis=-1)  # 1-norms
    out = np.empty_like(A)
    small = norms <= _THETA[9]
    for m in (3, 5, 7, 9):
        sel = small & (norms <= _THETA[m])
        if m > 3:
            sel &= norms > _THETA[{5: 3, 7: 5, 9: 7}[m]]
        if np.any(sel):
            U, V = _pade_uv(A[sel], m)
            out[sel] = np.linalg.solve(V - U, V + U)
    big = ~small
    if np.any(big):
        Ab = A[big]
        s = np.maximum(0, np.ceil(np.log2(norms[big] / _THETA[13]))).astype(int)
        Ab = Ab / (2.0 ** s)[:, None, None]
        U, V = _pade_uv(Ab, 13)
        X = np.linalg.solve(V - U, V + U)
        for k in range(int(s.max()) if s.size else 0):
            mask = s > k
            X[mask] = X[mask] @ X[mask]
        out[big] = X
    return out[0] if single else out


def spectral_radius(A) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(as_matrix(A)))))
