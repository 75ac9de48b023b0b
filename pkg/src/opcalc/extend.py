"""Linear relations, regularizers and the algebraic extension of a calculus.

An unbounded ``Phi(f)`` is represented by its graph, a subspace of
``C^n + C^n``.  Given bounded values ``Phi(e)`` and ``Phi(ef)`` for a family
of regularizers ``e``, the extension is

    graph Phi^(f) = { (x, y) : Phi(ef) x = Phi(e) y  for every e },

which is computed as one null space of the stacked blocks ``[Phi(ef) | -Phi(e)]``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (AxiomViolation, CertificateMissing, DomainMismatch, EmptySet,
                     NoRegularizerFound, TruncationFailure, QuadratureFailure)
from .funsym import (IN_E, IN_EE, FunctionSymbol, decay_certificate, ee_from_limits,
                     multiply, one, regularizer)
from .numlin import (DEFAULT_TOL, Subspace, ToleranceConfig, as_matrix, containment_residual,
                     eig_oracle, nullspace, op_norm, orth, principal_angles, subspace_gap,
                     subspace_intersect)
from .sector import SectorialHandle, make_handle, phi_ee

OPERATOR = "Operator"
PARTIAL = "PartialOperator"
RELATION = "Relation"
GRAPH_TOL = 1e-7


# -- linear relations --------------------------------------------------------------


@dataclass(frozen=True)
class LinearRelation:
    n: int
    graph: Subspace

    @property
    def X(self) -> np.ndarray:
        return self.graph.basis[: self.n]

    @property
    def Y(self) -> np.ndarray:
        return self.graph.basis[self.n:]

    @classmethod
    def from_matrix(cls, T) -> "LinearRelation":
        T = as_matrix(T)
        n = T.shape[0]
        G = np.vstack([np.eye(n), T])
        Q, _ = np.linalg.qr(G)
        return cls(n, Subspace(2 * n, Q))

    @classmethod
    def from_vectors(cls, n: int, G, tol: ToleranceConfig = DEFAULT_TOL) -> "LinearRelation":
        return cls(n, orth(G, tol))

    def dom(self, tol: ToleranceConfig = DEFAULT_TOL) -> Subspace:
        return orth(self.X, tol)

    def mul(self, tol: ToleranceConfig = DEFAULT_TOL) -> Subspace:
        """Multivalued part ``{y : (0, y) in graph}``."""
        if self.graph.dim == 0:
            return Subspace.zero(self.n)
        c = nullspace(self.X, tol).basis if op_norm(self.X) > tol.norm_abs_floor else np.eye(self.graph.dim)
        return orth(self.Y @ c, tol)

    def kernel(self, tol: ToleranceConfig = DEFAULT_TOL) -> Subspace:
        if self.graph.dim == 0:
            return Subspace.zero(self.n)
        c = nullspace(self.Y, tol).basis if op_norm(self.Y) > tol.norm_abs_floor else np.eye(self.graph.dim)
        return orth(self.X @ c, tol)

    def classify(self, tol: ToleranceConfig = DEFAULT_TOL) -> str:
        if self.mul(tol).dim > 0:
            return RELATION
        if self.dom(tol).dim < self.n:
            return PARTIAL
        return OPERATOR

    def is_bounded(self, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
        return self.classify(tol) == OPERATOR

    def matrix(self, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
        """The operator ``x -> y`` (on ``dom``; zero on its orthogonal complement)."""
        if self.mul(tol).dim > 0:
            raise DomainMismatch("relation is multivalued; no matrix representation")
        return self.Y @ np.linalg.pinv(self.X, rcond=tol.rank_rel_tol)

    def scale(self, c: complex) -> "LinearRelation":
        if c == 0:
            d = self.dom()
            return LinearRelation(self.n, Subspace(2 * self.n, np.vstack([d.basis, np.zeros_like(d.basis)])))
        return LinearRelation.from_vectors(self.n, np.vstack([self.X, c * self.Y]))

    def inverse(self) -> "LinearRelation":
        return LinearRelation(self.n, Subspace(2 * self.n, np.vstack([self.Y, self.X])))

    def __add__(self, other: "LinearRelation") -> "LinearRelation":
        """Operator sum ``{(x, y1 + y2) : (x, y1) in self, (x, y2) in other}``."""
        k = self.graph.dim
        c = nullspace(np.hstack([self.X, -other.X])).basis
        c1, c2 = c[:k], c[k:]
        return LinearRelation.from_vectors(self.n, np.vstack([self.X @ c1, self.Y @ c1 + other.Y @ c2]))

    def __matmul__(self, other: "LinearRelation") -> "LinearRelation":
        """Product ``self o other``: first ``other``, then ``self``."""
        k = other.graph.dim
        c = nullspace(np.hstack([other.Y, -self.X])).basis
        c1, c2 = c[:k], c[k:]
        return LinearRelation.from_vectors(self.n, np.vstack([other.X @ c1, self.Y @ c2]))

    def contained_in(self, other: "LinearRelation") -> float:
        """Residual of ``graph(self) subset graph(other)``."""
        return containment_residual(self.graph.basis, other.graph)

    def gap(self, other: "LinearRelation") -> float:
        return subspace_gap(self.graph, other.graph)

    def angle_distance(self, other: "LinearRelation") -> float:
        if self.graph.dim != other.graph.dim:
            return math.pi / 2
        ang = principal_angles(self.graph, other.graph)
        return float(ang.max()) if ang.size else 0.0


# -- anchors and regularizers ------------------------------------------------------------


def _normalized(M, floor):
    s = op_norm(M)
    return M / s if s > floor else M


def is_anchor_set(mats, tol: ToleranceConfig = DEFAULT_TOL):
    """True iff the matrices have trivial common kernel; also returns that kernel."""
    mats = [as_matrix(M) for M in mats]
    if not mats:
        raise EmptySet("anchor test needs at least one matrix")
    n = mats[0].shape[1]
    if any(M.shape[1] != n for M in mats):
        raise ValueError("matrices must share their column dimension")
    if all(op_norm(M) <= tol.norm_abs_floor for M in mats):
        return False, Subspace.full(n)
    stack = np.vstack([_normalized(M, tol.norm_abs_floor) for M in mats])
    witness = nullspace(stack, tol)
    return witness.dim == 0, witness


@dataclass
class Evaluator:
    """A calculus on bounded symbols plus its algebraic extension to the rest.

    ``bounded_fn`` maps E_e symbols to matrices.  Calling the evaluator on any
    symbol returns a :class:`LinearRelation`.
    """

    n: int
    bounded_fn: Callable
    omega_se: float = 0.0
    name: str = "evaluator"
    depth: int = 2
    tol: ToleranceConfig = DEFAULT_TOL
    _cache: dict = field(default_factory=dict, repr=False)

    def bounded(self, f: FunctionSymbol) -> np.ndarray:
        key = id(f)
        hit = self._cache.get(key)
        if hit is None or hit[0] is not f:
            hit = (f, np.asarray(self.bounded_fn(f), dtype=complex))
            self._cache[key] = hit
        return hit[1]

    def __call__(self, f: FunctionSymbol) -> LinearRelation:
        if IN_EE in f.tags:
            return LinearRelation.from_matrix(self.bounded(f))
        regs = candidate_regularizers(f, self, self.depth, self.tol)
        rel, _ = extend_phi(f, regs, self.tol)
        return rel


def sectorial_evaluator(A, tol: ToleranceConfig = DEFAULT_TOL, depth: int = 2) -> Evaluator:
    h = A if isinstance(A, SectorialHandle) else make_handle(A, tol)
    return Evaluator(h.n, lambda f: phi_ee(f, h, None, tol).result, h.omega_se,
                     "sectorial", depth, tol)


def oracle_evaluator(A, depth: int = 2, tol: ToleranceConfig = DEFAULT_TOL) -> Evaluator:
    """Evaluate bounded symbols as ``V f(Lambda) V^-1``."""
    A = as_matrix(A)
    orc = eig_oracle(A)
    scale = max(op_norm(A), 1.0)
    from .sector import spectral_angles
    omega_se = float(np.max(spectral_angles(orc.eigenvalues, scale)))
    return Evaluator(A.shape[0], orc.function, omega_se, "oracle", depth, tol)


@dataclass
class RegularizerSet:
    entries: list  # (e, Phi_e, Phi_ef)
    f: Optional[FunctionSymbol] = None

    def __len__(self):
        return len(self.entries)

    def labels(self):
        return [e.name if isinstance(e, FunctionSymbol) else str(e) for e, _, _ in self.entries]

    def subset(self, idx) -> "RegularizerSet":
        return RegularizerSet([self.entries[i] for i in idx], self.f)


def _limit(g: FunctionSymbol, radii, delta, stab: float = 1e-6, snap: float = 1e-6):
    z = np.concatenate([np.asarray(radii) * np.exp(1j * delta), np.asarray(radii) * np.exp(-1j * delta)])
    v = g(z)
    if not np.all(np.isfinite(v)):
        return None
    spread = float(np.max(np.abs(v - v[0])))
    if spread > stab * (1.0 + float(np.max(np.abs(v)))):
        return None
    lim = complex(v[0])
    return 0j if abs(lim) <= snap else lim


def certify_ee(g: FunctionSymbol, delta: float) -> Optional[FunctionSymbol]:
    """Numerically place ``g`` in E_e on rays of angle ``delta``, or return None.

    Limits at 0 and infinity are read off where the sampled values have settled;
    the remainder ``g - c - d/(1+z)`` must then pass :func:`decay_certificate`.
    """
    if IN_EE in g.tags:
        return g
    f0 = g.at_zero if g.at_zero is not None else _limit(g, [1e-30, 1e-29], delta)
    finf = _limit(g, [1e29, 1e30], delta)
    if f0 is None or finf is None:
        return None
    cand = ee_from_limits(g.func, f0, finf, g.omega, g.name)
    # keep the limit at 0 so evaluations at a zero eigenvalue are not 0/0
    cand = FunctionSymbol(cand.func, cand.domain, cand.tags, cand.ee_parts, g.name, f0)
    core = cand.ee_parts.e_core
    try:
        ok = decay_certificate(core, delta)
    except DomainMismatch:
        return None
    return cand if ok else None


@functools.lru_cache(maxsize=None)
def _family_member(j: int, k: int) -> FunctionSymbol:
    # one shared instance per (j, k) so evaluator caches hit across calls
    return regularizer(j, k)


def regularizer_pairs(depth: int):
    return [(j, k) for j in range(depth + 1) for k in range(depth + 1) if (j, k) != (0, 0)]


def candidate_regularizers(f: FunctionSymbol, h, depth: int = 2,
                           tol: ToleranceConfig = DEFAULT_TOL) -> RegularizerSet:
    """Scan ``z^j/(1+z)^(j+k)``, keep those ``e`` with ``ef`` certified in E_e.

    ``h`` is a :class:`SectorialHandle` or an :class:`Evaluator`.  Raises
    NoRegularizerFound when nothing in the family works; that is a failure of
    the search, not a proof that ``f`` has no regularizer.
    """
    ev = h if isinstance(h, Evaluator) else sectorial_evaluator(h, tol)
    if f.omega <= ev.omega_se:
        raise NoRegularizerFound(f"{f.name} lives on a sector no wider than omega_se")
    delta = 0.5 * (ev.omega_se + f.omega)
    entries = []
    for j, k in regularizer_pairs(depth):
        e = _family_member(j, k)
        ef = certify_ee(multiply(e, f), delta)
        if ef is None:
            continue
        try:
            entries.append((e, ev.bounded(e), ev.bounded(ef)))
        except (CertificateMissing, TruncationFailure, QuadratureFailure):
            continue
    if not entries:
        raise NoRegularizerFound(f"no z^j/(1+z)^(j+k), j,k <= {depth}, regularizes {f.name}")
    return RegularizerSet(entries, f)


def extend_phi(f: Optional[FunctionSymbol], regs: RegularizerSet, tol: ToleranceConfig = DEFAULT_TOL):
    """Graph ``{(x, y) : Phi(ef) x = Phi(e) y for all e}`` and its classification."""
    if len(regs) == 0:
        raise EmptySet("extension needs at least one regularizer")
    blocks = []
    for _, Pe, Pef in regs.entries:
        B = np.hstack([np.asarray(Pef, dtype=complex), -np.asarray(Pe, dtype=complex)])
        blocks.append(_normalized(B, tol.norm_abs_floor))
    n = blocks[0].shape[1] // 2
    rel = LinearRelation(n, nullspace(np.vstack(blocks), tol))
    cls = rel.classify(tol)
    anchor, _ = is_anchor_set([Pe for _, Pe, _ in regs.entries], tol)
    if anchor and cls == RELATION:
        raise AxiomViolation("anchor", rel.mul(tol).dim,
                             {"reason": "anchor regularizers produced a multivalued part"})
    return rel, cls


def anchored_membership(f: FunctionSymbol, h, depth: int = 2, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
    """Whether the found regularizers of ``f`` form an anchor set (commutative case)."""
    try:
        regs = candidate_regularizers(f, h, depth, tol)
    except NoRegularizerFound:
        return False
    ok, _ = is_anchor_set([Pe for _, Pe, _ in regs.entries], tol)
    return ok


# -- axiom suites -------------------------------------------------------------------


def _dom_of_product(F: LinearRelation, G: LinearRelation, tol) -> Subspace:
    return (F @ G).dom(tol)


def check_fc_axioms(evaluator: Callable, samples, tol: float = GRAPH_TOL,
                    scalars=(2.0, 1j, -0.5), inverse_pairs=(), raise_on_fail: bool = True) -> dict:
    """Check (FC1)-(FC3) as graph inclusions plus the equalities that hold when
    one factor is bounded, and ``Phi(g)^{-1} = Phi(f)`` for supplied pairs with ``fg = 1``.

    ``evaluator`` maps a FunctionSymbol to a LinearRelation.  Returns a report
    with the worst residual per axiom; raises AxiomViolation on the first
    residual above ``tol`` unless ``raise_on_fail`` is False.
    """
    samples = list(samples)
    worst = {"FC1": 0.0, "FC2": 0.0, "FC3": 0.0, "sum_eq": 0.0, "prod_eq": 0.0, "inverse": 0.0}
    failures = []
    rels = {id(f): evaluator(f) for f in samples}

    def record(axiom, res, payload):
        worst[axiom] = max(worst[axiom], res)
        if res > tol:
            failures.append((axiom, res, payload))
            if raise_on_fail:
                raise AxiomViolation(axiom, res, payload)

    n = next(iter(rels.values())).n if rels else None
    unit = evaluator(one())
    n = unit.n
    record("FC1", unit.gap(LinearRelation.from_matrix(np.eye(n))), {"f": "1"})
    for f in samples:
        F = rels[id(f)]
        for lam in scalars:
            record("FC2", F.scale(lam).contained_in(evaluator(lam * f)), {"f": f.name, "lambda": lam})
    for f in samples:
        F = rels[id(f)]
        for g in samples:
            G = rels[id(g)]
            S = evaluator(f + g)
            record("FC2", (F + G).contained_in(S), {"f": f.name, "g": g.name, "op": "sum"})
            P = evaluator(f * g)
            FG = F @ G
            record("FC3", FG.contained_in(P), {"f": f.name, "g": g.name, "op": "product"})
            lhs = FG.dom()
            rhs = subspace_intersect([G.dom(), P.dom()])
            record("FC3", subspace_gap(lhs, rhs), {"f": f.name, "g": g.name, "op": "domain"})
            if G.is_bounded():
                record("sum_eq", (F + G).gap(S), {"f": f.name, "g": g.name})
                record("prod_eq", FG.gap(P), {"f": f.name, "g": g.name})
    for f, g in inverse_pairs:
        G = evaluator(g)
        F = evaluator(f)
        inj = G.kernel().dim
        record("inverse", float(inj) + G.inverse().gap(F), {"f": f.name, "g": g.name})
    report = {"passed": not failures, "worst": worst, "worst_residual": max(worst.values()),
              "failures": [{"axiom": a, "residual": r, "payload": p} for a, r, p in failures]}
    return report


def corrupted_evaluator(evaluator: Callable, eps: float = 1e-3) -> Callable:
    """Fault injection: perturb the value of every product symbol by ``eps``."""

    def ev(f):
        rel = evaluator(f)
        if "*" in f.name and rel.is_bounded():
            T = rel.matrix()
            return LinearRelation.from_matrix(T + eps * np.ones_like(T))
        return rel

    return ev


def uniqueness_instance(ev1: Evaluator, ev2: Evaluator, symbols, depth: int = 2,
                        tol: ToleranceConfig = DEFAULT_TOL, agree_tol: float = 1e-7,
                        restrict_to=None) -> dict:
    """Extend ``f`` under two calculi from the same regularizer family and compare graphs.

    The evaluators must agree on the regularizer values used; if the agreeing
    subset is not an anchor set (or ``restrict_to`` selects a non-anchor
    subset) the instance is Inconclusive.
    """
    out = []
    for f in symbols:
        regs1 = candidate_regularizers(f, ev1, depth, tol)
        idx = range(len(regs1)) if restrict_to is None else restrict_to
        agree, ent1, ent2 = [], [], []
        for i in idx:
            e, Pe1, Pef1 = regs1.entries[i]
            ef = multiply(e, f)
            ef = certify_ee(ef, 0.5 * (max(ev1.omega_se, ev2.omega_se) + f.omega))
            Pe2, Pef2 = ev2.bounded(e), ev2.bounded(ef)
            diff = max(op_norm(Pe1 - Pe2), op_norm(Pef1 - Pef2)) / (1 + op_norm(Pe1) + op_norm(Pef1))
            if diff <= agree_tol:
                agree.append(e.name)
                ent1.append((e, Pe1, Pef1))
                ent2.append((e, Pe2, Pef2))
        anchor = bool(ent1) and is_anchor_set([P for _, P, _ in ent1], tol)[0]
        if not anchor:
            out.append({"f": f.name, "status": "Inconclusive", "gap": None, "regularizers": agree})
            continue
        r1, _ = extend_phi(f, RegularizerSet(ent1, f), tol)
        r2, _ = extend_phi(f, RegularizerSet(ent2, f), tol)
        gap = r1.angle_distance(r2)
        out.append({"f": f.name, "status": "Equal" if gap <= GRAPH_TOL else "Different",
                    "gap": gap, "regularizers": agree})
    return {"instances": out, "all_equal": all(r["status"] == "Equal" for r in out)}


def dual_transpose_check(evaluator: Evaluator, f: FunctionSymbol, g: FunctionSymbol,
                         tol: float = 1e-8) -> dict:
    """``Phi(fg)^T = Phi(g)^T Phi(f)^T`` for bounded ``f``, ``g``."""
    Pf, Pg, Pfg = evaluator.bounded(f), evaluator.bounded(g), evaluator.bounded(f * g)
    res = op_norm(Pfg.T - Pg.T @ Pf.T) / (1 + op_norm(Pfg))
    return {"residual": res, "passed": res <= tol}


def noncommutative_instance(seed: int = 0):
    """Regularizer values ``Phi(e_i) = M_i`` that do not commute, with ``Phi(e_i f) = M_i T``.

    The extension must return the operator ``T``.  Returns ``(regs, T)``.
    """
    rng = np.random.default_rng(seed)
    M1 = np.array([[1.0, 1.0], [0.0, 0.0]], dtype=complex)
    M2 = np.array([[0.0, 0.0], [1.0, 1.0]], dtype=complex) + np.array([[0.0, 0.0], [0.0, 1.0]])
    T = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    regs = RegularizerSet([("M1", M1, M1 @ T), ("M2", M2, M2 @ T)])
    return regs, T
