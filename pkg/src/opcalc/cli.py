"""Scenario runner and command line front end.

Every subcommand is turned into a scenario table and sent through
:func:`run_scenario`, so ad-hoc runs and bundled suites share one code path.
The process exit code is 0 exactly when every assertion of the run passed.
"""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import borel, extend, funsym as fs, hp, io, sector, subcalc
from .errors import ConfigError, NotDiagonalizable, OpcalcError
from .numlin import DEFAULT_TOL, ToleranceConfig, eig_oracle, op_norm, oracle_function
from .report import CalculusReport, _plain

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

CALCULI = ("sector", "extend", "stieltjes", "hirsch", "resolvent-integral", "hol-semigroup",
           "hp", "borel", "uniform-ext")
REQUIRED = {
    "sector": ("symbol",),
    "extend": ("symbol",),
    "stieltjes": ("measure",),
    "hirsch": ("measure",),
    "resolvent-integral": ("measure",),
    "hol-semigroup": ("measure",),
    "hp": ("mode",),
    "borel": ("mode",),
    "uniform-ext": ("sequence",),
}
HP_MODES = ("eval", "inversion", "compat", "commutant")
BOREL_MODES = ("eval", "axioms", "compose")


@dataclass
class Scenario:
    name: str
    calculus: str
    matrix: object
    params: dict = field(default_factory=dict)
    tolerances: ToleranceConfig = DEFAULT_TOL
    oracle: str = "eig"
    anchor: str = ""
    expect: dict = field(default_factory=dict)
    base: Path = field(default_factory=Path.cwd)


def scenario_from_dict(d: dict, base: Optional[Path] = None, name: Optional[str] = None) -> Scenario:
    d = dict(d)
    calc = d.pop("calculus", None)
    if calc not in CALCULI:
        raise ConfigError(f"calculus must be one of {', '.join(CALCULI)}, got {calc!r}")
    matrix = d.pop("matrix", None)
    matrix = d.pop("matrix_ref", matrix)
    if matrix is None:
        raise ConfigError("scenario needs 'matrix' or 'matrix_ref'")
    tol_table = d.pop("tolerances", {}) or {}
    try:
        tol = ToleranceConfig(**{k: float(v) for k, v in tol_table.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad tolerances: {exc}") from exc
    oracle = d.pop("oracle", "eig")
    if oracle not in ("eig", "none"):
        raise ConfigError(f"oracle must be 'eig' or 'none', got {oracle!r}")
    s = Scenario(name=str(d.pop("name", name or "scenario")), calculus=calc, matrix=matrix,
                 tolerances=tol, oracle=oracle, anchor=str(d.pop("anchor", "")),
                 expect=dict(d.pop("expect", {}) or {}), base=base or Path.cwd())
    s.params = d
    for key in REQUIRED[calc]:
        if key not in s.params:
            raise ConfigError(f"{calc} scenario '{s.name}' needs '{key}'")
    return s


def load_scenario(path) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"scenario file not found: {path}")
    try:
        data = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return scenario_from_dict(data, path.parent, path.stem)


# -- dispatch ----------------------------------------------------------------------------


def _num(p, key, default=None) -> complex:
    if key not in p:
        if default is None:
            raise ConfigError(f"missing parameter '{key}'")
        return complex(default)
    return io.parse_number(p[key])


def _real(p, key, default=None) -> float:
    c = _num(p, key, default)
    if c.imag != 0:
        raise ConfigError(f"'{key}' must be real")
    return c.real


def _oracle(s: Scenario, A, f, result) -> Optional[float]:
    """Relative distance to ``V f(Lambda) V^-1``, or None without a usable oracle."""
    if s.oracle == "none":
        return None
    try:
        O = oracle_function(A, f)
    except NotDiagonalizable:
        return None
    if not np.all(np.isfinite(O)):
        return None
    return float(op_norm(np.asarray(result) - O) / (1.0 + op_norm(O)))


def _symbol(s: Scenario, key="symbol") -> fs.FunctionSymbol:
    f = io.symbol(s.params[key])
    if "omega" in s.params:
        om = _real(s.params, "omega")
        if not 0 < om <= f.omega:
            raise ConfigError(f"omega={om} must lie in (0, {f.omega:.4g}] for {f.name}")
        if om < f.omega:
            f = replace(f, domain=fs.Sector(om))
    return f


def _run_sector(s, A, tol):
    f = _symbol(s)
    h = sector.make_handle(A, tol)
    contour = sector.ContourSpec(_real(s.params, "delta"), 10.0) if "delta" in s.params else None
    rep = sector.phi_ee(f, h, contour, tol)
    rep.details["symbol"] = f.name
    rep.oracle_residual = _oracle(s, A, f, rep.result)
    return rep


def _run_extend(s, A, tol):
    f = _symbol(s)
    depth = int(s.params.get("depth", 2))
    h = sector.make_handle(A, tol)
    ev = extend.sectorial_evaluator(h, tol, depth)
    regs = extend.candidate_regularizers(f, ev, depth, tol)
    rel, cls = extend.extend_phi(f, regs, tol)
    anchored, _ = extend.is_anchor_set([Pe for _, Pe, _ in regs.entries], tol)
    details = {"classification": cls, "dom_dim": rel.dom(tol).dim, "mul_dim": rel.mul(tol).dim,
               "regularizers_used": regs.labels(), "anchored": bool(anchored), "symbol": f.name}
    result = rel.matrix(tol) if cls == extend.OPERATOR else None
    rep = CalculusReport(result, 0.0, "extend", details)
    if result is not None:
        rep.oracle_residual = _oracle(s, A, f, result)
    return rep


def _run_stieltjes(s, A, tol):
    rep_f = fs.StieltjesRep(int(s.params.get("m", 1)), io.measure(s.params["measure"], s.base))
    rep = subcalc.phi_stieltjes(rep_f, A, tol, oracle=s.oracle == "eig")
    return rep


def _run_hirsch(s, A, tol):
    f = fs.HirschRep(_num(s.params, "a", 0.0), io.measure(s.params["measure"], s.base))
    return subcalc.phi_hirsch(f, A, tol, oracle=s.oracle == "eig")


def _kernel(s):
    k = s.params.get("kernel", subcalc.SHIFT_INVERSE)
    if k not in (subcalc.SHIFT_INVERSE, subcalc.A_OVER_SHIFT):
        raise ConfigError(f"kernel must be {subcalc.SHIFT_INVERSE} or {subcalc.A_OVER_SHIFT}")
    return k


def _run_resolvent_integral(s, A, tol):
    mu = io.measure(s.params["measure"], s.base)
    kernel = _kernel(s)
    rep = subcalc.phi_resolvent_integral(mu, kernel, A, tol)
    if "symbol" in s.params:
        f = io.symbol(s.params["symbol"])
    else:
        f = lambda z: subcalc.scalar_resolvent_integral(mu, kernel, z)  # noqa: E731
    rep.oracle_residual = _oracle(s, A, f, rep.result)
    return rep


def _run_hol_semigroup(s, A, tol):
    mu = io.measure(s.params["measure"], s.base)
    alpha = _num(s.params, "alpha", 0.0)
    rep = subcalc.phi_hol_semigroup(mu, alpha, A, tol, mode="engine")
    if s.oracle == "eig":
        try:
            O = subcalc.phi_hol_semigroup(mu, alpha, A, tol, mode="oracle").result
            rep.oracle_residual = float(op_norm(rep.result - O) / (1 + op_norm(O)))
        except NotDiagonalizable:
            pass
    return rep


def _run_hp(s, A, tol):
    mode = s.params["mode"]
    if mode not in HP_MODES:
        raise ConfigError(f"hp mode must be one of {', '.join(HP_MODES)}")
    h = hp.make_semigroup(A, tol)
    if mode == "eval":
        mu = io.measure(s.params["measure"], s.base)
        rep = hp.psi_hp(mu, h, tol)
        rep.oracle_residual = _oracle(s, A, lambda z: np.array([fs.laplace_transform(mu, x, tol) for x in z]),
                                      rep.result)
        return rep
    if mode == "inversion":
        rep = hp.complex_inversion(h, _real(s.params, "t"), _real(s.params, "omega", hp.DEFAULT_OMEGA), tol)
        if s.oracle == "none":
            rep.oracle_residual = None
        return rep
    if mode == "compat":
        mu = io.measure(s.params["measure"], s.base)
        out = hp.hp_sectorial_compat(io.symbol(s.params["symbol"]), mu, h, tol)
        details = {k: v for k, v in out.items() if k not in ("hp", "sector")}
        return CalculusReport(out["hp"], out["difference"], "hp", details)
    S = io.load_matrix(s.params.get("s", s.params.get("commutant")), s.base)
    c1, c2 = hp.commutant_check(S, h)
    return CalculusReport(None, 0.0, "hp", {"commutes_with_resolvent": c1, "commutes_with_semigroup": c2,
                                            "biconditional": c1 == c2})


def _run_borel(s, A, tol):
    mode = s.params["mode"]
    if mode not in BOREL_MODES:
        raise ConfigError(f"borel mode must be one of {', '.join(BOREL_MODES)}")
    h = borel.make_normal(A)
    if mode == "eval":
        f = io.function(s.params.get("fn", "z"))
        res = borel.phi_borel(f, h)
        rep = CalculusReport(res, 0.0, "borel", {"fn": s.params.get("fn", "z"),
                                                 "eigenvalues": h.eigenvalues})
        rep.oracle_residual = _oracle(s, A, f, res)
        return rep
    if mode == "compose":
        f, g = io.function(s.params.get("fn", "z")), io.function(s.params.get("fn2", "z"))
        out = borel.composition_check(f, g, h, float(s.params.get("compose_tol", 1e-10)))
        return CalculusReport(borel.phi_borel(lambda z: f(g(z)), h), out["residual"], "borel",
                              {"composition": out})
    names = s.params.get("fns", ["z", "one", "conj", "abs", "exp", "square", "z_over_1pz2"])
    samples = [(n, io.function(n)) for n in names]
    clip = [(lambda z, r=r: np.where(np.abs(z) > r, r * z / np.where(z == 0, 1, np.abs(z)), z))
            for r in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 1e3)]
    adj = {"conj_transpose": borel.conj_transpose, "transpose": lambda M: M.T}
    adjoint = adj.get(s.params.get("adjoint", "conj_transpose"))
    if adjoint is None:
        raise ConfigError("adjoint must be conj_transpose or transpose")
    out = borel.mfc_axiom_suite(h, samples, [("radial_clip", clip, lambda z: z)], adjoint=adjoint)
    f_ai = io.function(s.params.get("fn", "z"))
    g_ai = io.function(s.params.get("fn2", "square"))
    ai = borel.approx_identity_suite(f_ai, g_ai, h)
    return CalculusReport(None, out["worst_residual"], "borel",
                          {"axioms": out, "approx_identity": {k: v for k, v in ai.items() if k != "rates"},
                           "approx_identity_passed": ai["passed"]})


def _probe(s, A, default_omega):
    p = s.params
    omega = _real(p, "probe_omega", default_omega)
    radii = tuple(float(r) for r in p.get("probe_radii", (0.1, 1.0, 10.0)))
    mode = p.get("probe_mode", "bp")
    sup = float(p.get("sup_bound", 20.0)) if mode == "bp" else math.inf
    opmode = p.get("operator_mode", "norm")
    sep = subcalc.default_separating(A) if opmode == "separated" else None
    try:
        return subcalc.ConvergenceProbe(subcalc.sector_grid(omega, radii), mode, sup, opmode, sep,
                                        float(p.get("tau1_tol", 1e-2)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _run_uniform_ext(s, A, tol):
    kind = str(s.params["sequence"])
    default_omega = 0.9 * math.pi
    if kind.startswith("closability:"):
        sub = kind.split(":", 1)[1]
        if sub not in ("damped", "bump", "power"):
            raise ConfigError(f"unknown closability sequence {sub!r}")
        seq = subcalc.closability_sequence(sub, A, tol=tol)
        if sub == "power":
            default_omega = 0.5 * math.pi
        oracle_f = lambda z: np.zeros_like(z)  # noqa: E731
    elif kind == "nollau":
        lam = _num(s.params, "lambda", 1 + 4j)
        seq = subcalc.resolvent_integral_sequence(fs.nollau_weight(lam), subcalc.SHIFT_INVERSE, A,
                                                  target=fs.nollau(lam), tol=tol)
        oracle_f = seq.target
    elif kind == "stieltjes":
        f = fs.StieltjesRep(int(s.params.get("m", 1)), io.measure(s.params["measure"], s.base))
        seq = subcalc.stieltjes_truncation_sequence(f, A, tol=tol)
        oracle_f = seq.target
        s.params.setdefault("probe_mode", "uniform")
    elif kind == "approx_identity":
        e = io.symbol(s.params.get("symbol", "z_over_1pz2"))
        seq = subcalc.approximate_identity_sequence(e, A, tol=tol)
        oracle_f = e
        s.params.setdefault("probe_mode", "uniform")
    elif kind == "coi":
        h = hp.make_semigroup(A, tol)
        t = _real(s.params, "t", 1.0)
        seq = hp.coi_approximants(h, t, _real(s.params, "omega", hp.DEFAULT_OMEGA), tol=tol, cross_check=None)
        oracle_f = seq.target
        default_omega = 0.45 * math.pi
        s.params.setdefault("probe_mode", "uniform")
    else:
        raise ConfigError(f"unknown sequence {kind!r}")
    rep = subcalc.uniform_extension_eval(seq, _probe(s, A, default_omega), float(s.params.get("limit_tol", 1e-6)))
    rep.details["sequence"] = kind
    rep.oracle_residual = _oracle(s, A, oracle_f, rep.result)
    return rep


_DISPATCH = {
    "sector": _run_sector,
    "extend": _run_extend,
    "stieltjes": _run_stieltjes,
    "hirsch": _run_hirsch,
    "resolvent-integral": _run_resolvent_integral,
    "hol-semigroup": _run_hol_semigroup,
    "hp": _run_hp,
    "borel": _run_borel,
    "uniform-ext": _run_uniform_ext,
}


def _assertions(s: Scenario, rep: CalculusReport) -> list:
    out = []
    ex = s.expect

    def check(name, value, bound, ok):
        out.append({"check": name, "value": value, "bound": bound, "passed": bool(ok)})

    if "oracle_residual_max" in ex:
        b = float(ex["oracle_residual_max"])
        v = rep.oracle_residual
        check("oracle_residual", v, b, v is not None and v <= b)
    if "err_estimate_max" in ex:
        b = float(ex["err_estimate_max"])
        check("err_estimate", float(rep.err_estimate), b, rep.err_estimate <= b)
    if "result_norm_max" in ex:
        b = float(ex["result_norm_max"])
        v = None if rep.result is None else op_norm(rep.result)
        check("result_norm", v, b, v is not None and v <= b)
    if "diagonal" in ex:
        want = np.array([io.parse_number(x) for x in ex["diagonal"]])
        b = float(ex.get("diagonal_tol", 1e-7))
        v = None if rep.result is None else float(np.max(np.abs(np.diag(rep.result) - want)))
        check("diagonal", v, b, v is not None and v <= b)
    for key in ("classification", "anchored", "biconditional", "approx_identity_passed"):
        if key in ex:
            v = rep.details.get(key)
            check(key, v, ex[key], v == ex[key])
    if "composition_passed" in ex:
        v = rep.details.get("composition", {}).get("passed")
        check("composition_passed", v, ex["composition_passed"], v == ex["composition_passed"])
    return out


def run_scenario(s: Scenario) -> CalculusReport:
    """Run one scenario; module errors propagate, bad input raises ConfigError.

    With ``expect.error = "<ErrorName>"`` the scenario instead asserts that the
    named error is raised, and the report records it.
    """
    if isinstance(s, dict):
        s = scenario_from_dict(s)
    A = io.load_matrix(s.matrix, s.base)
    want_error = s.expect.get("error")
    try:
        rep = _DISPATCH[s.calculus](s, A, s.tolerances)
    except ConfigError:
        raise
    except OpcalcError as exc:
        if want_error is None:
            raise
        rep = CalculusReport(None, 0.0, s.calculus, {"error": type(exc).__name__, "message": str(exc)})
    asserts = _assertions(s, rep)
    if want_error is not None:
        got = rep.details.get("error")
        asserts.append({"check": "error", "value": got, "bound": want_error, "passed": got == want_error})
    rep.details["scenario"] = {"name": s.name, "anchor": s.anchor, "assertions": asserts,
                               "passed": all(a["passed"] for a in asserts)}
    return rep


def report_passed(rep: CalculusReport) -> bool:
    return bool(rep.details.get("scenario", {}).get("passed", True))


def _failed_report(name: str, calculus: str, anchor: str, exc: Exception) -> CalculusReport:
    return CalculusReport(None, math.inf, calculus,
                          {"error": type(exc).__name__, "message": str(exc),
                           "scenario": {"name": name, "anchor": anchor, "assertions": [], "passed": False}})


def _run_file(path: Path):
    try:
        s = load_scenario(path)
    except ConfigError as exc:
        return path.stem, _failed_report(path.stem, "unknown", "", exc)
    try:
        return s.name, run_scenario(s)
    except OpcalcError as exc:
        return s.name, _failed_report(s.name, s.calculus, s.anchor, exc)


def run_suite(directory, workers: int = 1) -> dict:
    """Run every ``*.toml`` in ``directory``; rows are ordered by scenario name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"suite directory not found: {directory}")
    files = sorted(directory.glob("*.toml"))
    if workers > 1 and len(files) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_file, files))
    else:
        results = [_run_file(p) for p in files]
    results.sort(key=lambda r: r[0])
    rows, reports = [], {}
    for name, rep in results:
        meta = rep.details["scenario"]
        rows.append({"name": name, "calculus": rep.calculus, "anchor": meta["anchor"],
                     "passed": meta["passed"], "err_estimate": rep.err_estimate,
                     "oracle_residual": rep.oracle_residual, "error": rep.details.get("error")})
        reports[name] = rep
    res = [r["oracle_residual"] for r in rows if r["oracle_residual"] is not None]
    return {"total": len(rows), "passed": sum(r["passed"] for r in rows),
            "failed": sum(not r["passed"] for r in rows),
            "worst_oracle_residual": max(res) if res else None, "scenarios": rows, "reports": reports}


# -- output ------------------------------------------------------------------------------

CSV_FIELDS = ("name", "calculus", "passed", "err_estimate", "oracle_residual", "error", "anchor")


def _report_dict(obj) -> dict:
    if isinstance(obj, CalculusReport):
        return obj.to_dict()
    if isinstance(obj, dict) and "scenarios" in obj:
        out = {k: v for k, v in obj.items() if k != "reports"}
        out["reports"] = {k: v.to_dict() for k, v in obj.get("reports", {}).items()}
        return _plain(out)
    return _plain(obj)


def _csv_rows(obj):
    if isinstance(obj, CalculusReport):
        meta = obj.details.get("scenario", {})
        return [{"name": meta.get("name", ""), "calculus": obj.calculus, "passed": meta.get("passed", True),
                 "err_estimate": obj.err_estimate, "oracle_residual": obj.oracle_residual,
                 "error": obj.details.get("error"), "anchor": meta.get("anchor", "")}]
    return obj["scenarios"]


def emit_report(obj, fmt: str = "json") -> bytes:
    """Serialise a report or a suite summary; field order is deterministic."""
    if fmt == "json":
        return (json.dumps(_report_dict(obj), sort_keys=True, indent=2) + "\n").encode()
    if fmt in ("csv", "csv-table"):
        buf = _stdio.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for row in _csv_rows(obj):
            w.writerow({k: ("" if row.get(k) is None else (repr(row[k]) if isinstance(row[k], float) else row[k]))
                        for k in CSV_FIELDS})
        return buf.getvalue().encode()
    raise ConfigError(f"unknown format {fmt!r}")


# -- command line -------------------------------------------------------------------------


def _common(p):
    p.add_argument("--tol", type=float, default=None, help="relative quadrature tolerance")
    p.add_argument("--depth", type=int, default=None, help="regularizer search depth")
    p.add_argument("--oracle", choices=("eig", "none"), default="eig")
    p.add_argument("--format", choices=("json", "csv-table"), default="json")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="opcalc", description="Functional calculi for matrices.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sector", help="contour calculus for sectorial matrices")
    p.add_argument("action", choices=("eval",))
    p.add_argument("--matrix", required=True)
    p.add_argument("--symbol", required=True)
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    _common(p)

    p = sub.add_parser("extend", help="algebraic extension by regularizers")
    p.add_argument("--matrix", required=True)
    p.add_argument("--symbol", required=True)
    _common(p)

    p = sub.add_parser("subcalc", help="Stieltjes, Hirsch, resolvent-integral, semigroup and limit calculi")
    p.add_argument("action", choices=("stieltjes", "hirsch", "resolvent-integral", "hol-semigroup", "uniform-ext"))
    p.add_argument("--matrix", required=True)
    p.add_argument("--measure", default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--alpha", default=None)
    p.add_argument("--a", default=None)
    p.add_argument("--kernel", default=None)
    p.add_argument("--symbol", default=None)
    p.add_argument("--sequence", default=None)
    _common(p)

    p = sub.add_parser("hp", help="Hille-Phillips calculus")
    p.add_argument("action", choices=HP_MODES)
    p.add_argument("--matrix", required=True)
    p.add_argument("--measure", default=None)
    p.add_argument("--symbol", default=None)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--s", default=None, help="matrix file for the commutant check")
    _common(p)

    p = sub.add_parser("borel", help="calculus of normal matrices")
    p.add_argument("action", choices=BOREL_MODES)
    p.add_argument("--matrix", required=True)
    p.add_argument("--fn", default="z")
    p.add_argument("--fn2", default=None)
    _common(p)

    p = sub.add_parser("run", help="run one scenario file")
    p.add_argument("scenario")
    _common(p)

    p = sub.add_parser("suite", help="run every scenario in a directory")
    p.add_argument("directory", nargs="?", default=None, help="defaults to the bundled scenarios")
    p.add_argument("--workers", type=int, default=1)
    _common(p)
    return ap


def bundled_scenarios() -> Path:
    return Path(__file__).parent / "scenarios"


def _apply_flags(s: Scenario, args) -> Scenario:
    if args.tol is not None:
        s.tolerances = replace(s.tolerances, quad_rel_tol=args.tol)
    if args.depth is not None:
        s.params["depth"] = args.depth
    if args.oracle != "eig":
        s.oracle = args.oracle
    return s


def _scenario_from_args(args) -> Scenario:
    d = {"name": f"cli-{args.command}", "matrix_ref": args.matrix}
    cmd = args.command
    if cmd == "sector":
        d.update(calculus="sector", symbol=args.symbol)
        if args.omega is not None:
            d["omega"] = args.omega
        if args.delta is not None:
            d["delta"] = args.delta
    elif cmd == "extend":
        d.update(calculus="extend", symbol=args.symbol)
    elif cmd == "subcalc":
        d["calculus"] = args.action
        for key in ("measure", "m", "alpha", "a", "kernel", "symbol", "sequence"):
            if getattr(args, key) is not None:
                d[key] = getattr(args, key)
    elif cmd == "hp":
        d.update(calculus="hp", mode=args.action)
        for key in ("measure", "symbol", "t", "omega", "s"):
            if getattr(args, key) is not None:
                d[key] = getattr(args, key)
    elif cmd == "borel":
        d.update(calculus="borel", mode=args.action, fn=args.fn)
        if args.fn2 is not None:
            d["fn2"] = args.fn2
    return scenario_from_dict(d, Path.cwd())


def _write(data: bytes, out: Optional[str]):
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.write(data.decode())


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        io.seed()
        if args.command == "suite":
            directory = args.directory or bundled_scenarios()
            summary = run_suite(directory, args.workers)
            _write(emit_report(summary, args.format), args.out)
            return 0 if summary["failed"] == 0 else 1
        s = load_scenario(args.scenario) if args.command == "run" else _scenario_from_args(args)
        s = _apply_flags(s, args)
        try:
            rep = run_scenario(s)
        except ConfigError:
            raise
        except OpcalcError as exc:
            rep = _failed_report(s.name, s.calculus, s.anchor, exc)
        _write(emit_report(rep, args.format), args.out)
        return 0 if report_passed(rep) else 1
    except ConfigError as exc:
        sys.stderr.write(f"opcalc: configuration error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
