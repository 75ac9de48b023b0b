"""Result record shared by all calculi, plus JSON-friendly encoding."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


def encode_matrix(M) -> dict:
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    return {"re": M.real.tolist(), "im": M.imag.tolist()}


def decode_matrix(d) -> np.ndarray:
    return np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)


def _plain(x):
    """Recursively turn numpy scalars/arrays and complex numbers into JSON-safe values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        if np.iscomplexobj(x) or x.ndim == 2:
            return encode_matrix(x) if x.ndim == 2 else [_plain(v) for v in x.tolist()]
        return x.tolist()
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


@dataclass
class CalculusReport:
    result: Optional[np.ndarray]
    err_estimate: float
    calculus: str
    details: dict = field(default_factory=dict)
    oracle_residual: Optional[float] = None

    def to_dict(self) -> dict:
        out = {
            "calculus": self.calculus,
            "err_estimate": _plain(float(self.err_estimate)),
            "details": _plain(self.details),
        }
        if self.result is not None:
            out["result"] = encode_matrix(self.result)
        if self.oracle_residual is not None:
            out["oracle_residual"] = float(self.oracle_residual)
        return out
