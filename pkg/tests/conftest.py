import math

import numpy as np
import pytest

# acceptance results, filled by test_acceptance.py and printed at the end of the run
ACCEPTANCE = {}


def record_acceptance(number, passed, detail=""):
    # a criterion may be checked by several tests; it passes only if all parts do
    ACCEPTANCE.setdefault(number, []).append((bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[k]
        ok = all(p for p, _ in parts)
        detail = "; ".join(d for _, d in parts)
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def sectorial_diagonalizable(rng, n, max_angle=0.4 * math.pi, radii=(0.2, 5.0), cond_max=1e3,
                             with_zero=False):
    """``A = V diag(lam) V^-1`` with ``|arg lam| <= max_angle`` and ``cond(V) <= cond_max``.

    Returns ``(A, V, lam)`` so tests can form ``V f(lam) V^-1`` themselves.
    """
    r = np.exp(rng.uniform(math.log(radii[0]), math.log(radii[1]), n))
    lam = r * np.exp(1j * rng.uniform(-max_angle, max_angle, n))
    if with_zero:
        lam[0] = 0.0
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    eps = 0.5
    while True:
        V = np.eye(n) + eps * G / np.linalg.norm(G, 2)
        if np.linalg.cond(V) <= cond_max:
            break
        eps *= 0.5
    A = V @ np.diag(lam) @ np.linalg.inv(V)
    return A, V, lam


def oracle_from_factors(V, lam, f):
    return V @ np.diag(np.asarray(f(lam), dtype=complex)) @ np.linalg.inv(V)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
