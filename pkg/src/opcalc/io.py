"""Matrix and measure loading plus the built-in symbol/measure/function registry."""

from __future__ import annotations

import json
import math
import os
import re
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy.io

from . import funsym as fs
from .errors import ConfigError

DEFAULT_SEED = 42
_CALL = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?\s*$")


def seed() -> int:
    raw = os.environ.get("OPCALC_SEED", "")
    if not raw.strip():
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"OPCALC_SEED must be an integer, got {raw!r}") from exc


def parse_number(tok) -> complex:
    if isinstance(tok, (int, float, complex)):
        return complex(tok)
    if isinstance(tok, (list, tuple)) and len(tok) == 2:
        return complex(float(tok[0]), float(tok[1]))
    s = str(tok).strip().replace(" ", "")
    if s in ("pi", "+pi"):
        return complex(math.pi)
    s = s.replace("i", "j")
    try:
        return complex(s)
    except ValueError as exc:
        raise ConfigError(f"cannot parse number {tok!r}") from exc


def parse_call(text: str):
    """``"name(a, b)"`` -> ``("name", [a, b])`` with complex arguments."""
    m = _CALL.match(str(text))
    if not m:
        raise ConfigError(f"cannot parse {text!r} as name(args)")
    name, args = m.group(1), m.group(2)
    vals = [parse_number(a) for a in args.split(",")] if args and args.strip() else []
    return name, vals


def _real(c: complex, what: str) -> float:
    if abs(c.imag) > 0:
        raise ConfigError(f"{what} must be real")
    return c.real


def _int(c: complex, what: str) -> int:
    r = _real(c, what)
    if r != int(r):
        raise ConfigError(f"{what} must be an integer")
    return int(r)


# -- matrices -----------------------------------------------------------------------


def _matrix_from_nested(data) -> np.ndarray:
    if isinstance(data, dict) and "re" in data:
        im = data.get("im")
        M = np.asarray(data["re"], dtype=float)
        return M + 1j * np.asarray(im, dtype=float) if im is not None else M.astype(complex)
    arr = np.asarray(data, dtype=float)
    if arr.ndim == 3 and arr.shape[2] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim == 2:
        return arr.astype(complex)
    raise ConfigError("matrix JSON must be a 2-D list, a 2-D list of [re, im] pairs, or {re, im}")


def load_matrix(ref, base: Optional[Path] = None, rng_seed: Optional[int] = None) -> np.ndarray:
    """Matrix from a file (.mtx, .json, .npy), an inline nested list, or ``random_normal(n)``."""
    if isinstance(ref, (list, dict)):
        try:
            M = _matrix_from_nested(ref)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad inline matrix: {exc}") from exc
    elif isinstance(ref, str) and ref.startswith("random_normal("):
        from .borel import random_normal
        _, args = parse_call(ref)
        if len(args) != 1:
            raise ConfigError("random_normal takes the dimension")
        rng = np.random.default_rng(seed() if rng_seed is None else rng_seed)
        M = random_normal(_int(args[0], "dimension"), rng)
    else:
        path = Path(ref)
        if base is not None and not path.is_absolute():
            path = base / path
        if not path.is_file():
            raise ConfigError(f"matrix file not found: {path}")
        try:
            if path.suffix == ".mtx":
                M = scipy.io.mmread(str(path))
                M = np.asarray(M.todense() if hasattr(M, "todense") else M, dtype=complex)
            elif path.suffix == ".npy":
                M = np.asarray(np.load(path), dtype=complex)
            elif path.suffix == ".json":
                M = _matrix_from_nested(json.loads(path.read_text()))
            else:
                raise ConfigError(f"unsupported matrix format {path.suffix!r}")
        except (ValueError, TypeError, OSError) as exc:
            raise ConfigError(f"cannot read matrix {path}: {exc}") from exc
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise ConfigError(f"matrix must be square and non-empty, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ConfigError("matrix has non-finite entries")
    return M


def save_matrix_json(M, path) -> None:
    M = np.asarray(M, dtype=complex)
    data = [[[float(x.real), float(x.imag)] for x in row] for row in M]
    Path(path).write_text(json.dumps(data))


# -- symbols ----------------------------------------------------------------------


def _sym_rational(args):
    if len(args) not in (2, 3):
        raise ConfigError("rational(j, k[, lambda])")
    lam = args[2] if len(args) == 3 else 1.0
    return fs.rational(_int(args[0], "j"), _int(args[1], "k"), lam)


SYMBOLS: dict[str, Callable] = {
    "z_over_1pz2": lambda a: fs.rational(1, 2),
    "inv_1pz": lambda a: fs.inv_1pz(),
    "one": lambda a: fs.one(),
    "constant": lambda a: fs.constant(a[0]),
    "inverse_z": lambda a: fs.inverse_z(),
    "sqrt": lambda a: fs.power(0.5),
    "power": lambda a: fs.power(a[0]),
    "rational": _sym_rational,
    "regularizer": lambda a: fs.regularizer(_int(a[0], "j"), _int(a[1], "k")),
    "nollau": lambda a: fs.nollau(a[0] if a else 1 + 4j),
    "dungey": lambda a: fs.dungey(),
    "exp_neg": lambda a: fs.exp_neg(a[0] if a else 1.0),
}


def symbol(text: str) -> fs.FunctionSymbol:
    name, args = parse_call(text)
    if name not in SYMBOLS:
        raise ConfigError(f"unknown symbol {name!r}; known: {', '.join(sorted(SYMBOLS))}")
    try:
        return SYMBOLS[name](args)
    except IndexError as exc:
        raise ConfigError(f"missing arguments for {text!r}") from exc


# -- measures ------------------------------------------------------------------------


MEASURES: dict[str, Callable] = {
    "dirac": lambda a: fs.dirac(a[0] if a else 0.0, a[1] if len(a) > 1 else 1.0),
    "exp_decay": lambda a: fs.exp_decay(_real(a[0], "rate") if a else 1.0, a[1] if len(a) > 1 else 1.0),
    "power_exp": lambda a: fs.power_exp(_real(a[0], "p"), _real(a[1], "rate") if len(a) > 1 else 1.0),
    "nollau_weight": lambda a: fs.nollau_weight(a[0] if a else 1 + 4j),
    "dungey_weight": lambda a: fs.dungey_weight(),
    "zero": lambda a: fs.zero_measure(),
}


def _measure_from_dict(d: dict) -> fs.MeasureRep:
    atoms = [(parse_number(loc), parse_number(w)) for loc, w in d.get("atoms", [])]
    mu = fs.atomic(atoms) if atoms else fs.zero_measure()
    dens = d.get("density")
    if dens is None:
        return mu
    if isinstance(dens, str):
        extra = measure(dens)
    elif isinstance(dens, dict):
        kind = dens.get("kind", "exp_decay")
        if kind == "exp_decay":
            extra = fs.exp_decay(float(dens.get("rate", 1.0)), parse_number(dens.get("weight", 1.0)))
        elif kind == "power_exp":
            extra = fs.power_exp(float(dens["p"]), float(dens.get("rate", 1.0)),
                                 parse_number(dens.get("weight", 1.0)))
        else:
            raise ConfigError(f"unknown density kind {kind!r}")
    else:
        raise ConfigError("density must be a name or a table")
    if not mu.atoms:
        return extra
    support = mu.support if isinstance(mu.support, fs.ClosedSector) else extra.support
    try:
        return fs.MeasureRep(mu.atoms + extra.atoms, extra.density, extra.window, support,
                             extra.ray_angle, mu.tv_bound + extra.tv_bound, extra.log_tails,
                             f"{mu.name}+{extra.name}", {"atoms": (mu.spec or {}).get("atoms", []),
                                                         **(extra.spec or {})})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def measure(ref, base: Optional[Path] = None) -> fs.MeasureRep:
    """Measure from a built-in name such as ``"dirac(2)"``, an inline table, or a JSON file.

    JSON layout: ``{"atoms": [[loc, weight], ...], "density": {"kind": "exp_decay", "rate": 1}}``;
    complex numbers may be written as ``[re, im]`` or ``"1+2j"``.
    """
    if isinstance(ref, dict):
        return _measure_from_dict(ref)
    text = str(ref)
    path = Path(text)
    if base is not None and not path.is_absolute():
        path = base / path
    if text.endswith(".json"):
        if not path.is_file():
            raise ConfigError(f"measure file not found: {path}")
        try:
            return _measure_from_dict(json.loads(path.read_text()))
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"cannot read measure {path}: {exc}") from exc
    name, args = parse_call(text)
    if name not in MEASURES:
        raise ConfigError(f"unknown measure {name!r}; known: {', '.join(sorted(MEASURES))}")
    return MEASURES[name](args)


# -- pointwise functions for the normal calculus --------------------------------------------


def _fn_sqrt(z):
    return np.sqrt(z)


FUNCTIONS: dict[str, Callable] = {
    "z": lambda z: z,
    "one": lambda z: np.ones_like(z),
    "conj": np.conj,
    "abs": np.abs,
    "exp": np.exp,
    "exp_neg": lambda z: np.exp(-z),
    "log": np.log,
    "neg_log": lambda z: -np.log(z),
    "sqrt": _fn_sqrt,
    "square": lambda z: z ** 2,
    "inv": lambda z: 1.0 / z,
    "z_over_1pz2": lambda z: z / (1 + z) ** 2,
    "inv_1pz": lambda z: 1.0 / (1 + z),
    "indicator_re_pos": lambda z: (np.real(z) > 0).astype(complex),
    "clip_unit": lambda z: np.where(np.abs(z) > 1, z / np.where(z == 0, 1, np.abs(z)), z),
}


def function(name: str) -> Callable:
    if name not in FUNCTIONS:
        raise ConfigError(f"unknown function {name!r}; known: {', '.join(sorted(FUNCTIONS))}")
    return FUNCTIONS[name]
