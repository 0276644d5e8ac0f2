"""Built-in test functions and mesh generators for the convergence harness."""

from __future__ import annotations

import numpy as np

F2_S = 10.0 ** (-1.5)
SCHERK_ETA = 1e-2


def f1(x):
    return np.exp(-x) * np.sin(5.0 * np.pi * x)


def f1_prime(x):
    return np.exp(-x) * (5.0 * np.pi * np.cos(5.0 * np.pi * x) - np.sin(5.0 * np.pi * x))


def f2(x, s: float = F2_S):
    return (np.exp(-x / s) - np.exp((x - 2.0) / s)) / (1.0 - np.exp(-2.0 / s))


def f2_prime(x, s: float = F2_S):
    return (-np.exp(-x / s) - np.exp((x - 2.0) / s)) / (s * (1.0 - np.exp(-2.0 / s)))


def franke(x, y):
    t1 = 0.75 * np.exp(-((9 * x - 2) ** 2 + (9 * y - 2) ** 2) / 4)
    t2 = 0.75 * np.exp(-((9 * x + 1) ** 2) / 49 - (9 * y + 1) / 10)
    t3 = 0.5 * np.exp(-((9 * x - 7) ** 2 + (9 * y - 3) ** 2) / 4)
    t4 = -0.2 * np.exp(-((9 * x - 4) ** 2) - (9 * y - 7) ** 2)
    return t1 + t2 + t3 + t4


def _franke_terms(x, y):
    t1 = 0.75 * np.exp(-((9 * x - 2) ** 2 + (9 * y - 2) ** 2) / 4)
    t2 = 0.75 * np.exp(-((9 * x + 1) ** 2) / 49 - (9 * y + 1) / 10)
    t3 = 0.5 * np.exp(-((9 * x - 7) ** 2 + (9 * y - 3) ** 2) / 4)
    t4 = -0.2 * np.exp(-((9 * x - 4) ** 2) - (9 * y - 7) ** 2)
    # (term, du/dx, du/dy) for u the exponent of each term
    return (
        (t1, -4.5 * (9 * x - 2), -4.5 * (9 * y - 2)),
        (t2, -18.0 * (9 * x + 1) / 49.0, np.full_like(np.asarray(y, dtype=float), -0.9)),
        (t3, -4.5 * (9 * x - 7), -4.5 * (9 * y - 3)),
        (t4, -18.0 * (9 * x - 4), -18.0 * (9 * y - 7)),
    )


def franke_x(x, y):
    return sum(t * ux for t, ux, _ in _franke_terms(x, y))


def franke_y(x, y):
    return sum(t * uy for t, _, uy in _franke_terms(x, y))


def franke_xy(x, y):
    # every exponent is additively separable, so d2(e^u)/dxdy = e^u ux uy
    return sum(t * ux * uy for t, ux, uy in _franke_terms(x, y))


def scherk(x, y):
    return np.log(np.cos(y) / np.cos(x))


def scherk_x(x, y):
    return np.tan(x) + 0.0 * y


def scherk_y(x, y):
    return -np.tan(y) + 0.0 * x


def scherk_xy(x, y):
    return 0.0 * x * y


def ball3d(x, y, z):
    r2 = (x - 0.5) ** 2 + (y - 0.5) ** 2 + (z - 0.5) ** 2
    return np.sqrt(64.0 - 81.0 * r2) / 9.0 - 0.5


def graded_mesh(a: float, b: float, n_spans: int, strength: float = 3.0):
    """Symmetric mesh on [a, b] clustering nodes at both ends.

    ``strength`` controls the clustering ratio (0 recovers a uniform mesh).
    """
    t = np.linspace(-1.0, 1.0, n_spans + 1)
    if strength <= 0:
        u = t
    else:
        u = np.tanh(strength * t) / np.tanh(strength)
    return a + (b - a) * (u + 1.0) / 2.0


BUILTINS = {
    "f1": {
        "dim": 1, "domain": [(-1.0, 1.0)],
        "f": f1, "fprime": f1_prime,
    },
    "f2": {
        "dim": 1, "domain": [(0.0, 2.0)],
        "f": f2, "fprime": f2_prime,
    },
    "sin": {
        "dim": 1, "domain": [(0.0, 2.0 * np.pi)],
        "f": np.sin, "fprime": np.cos,
    },
    "franke": {
        "dim": 2, "domain": [(0.0, 1.0), (0.0, 1.0)],
        "f": franke, "fx": franke_x, "fy": franke_y, "fxy": franke_xy,
    },
    "scherk": {
        "dim": 2,
        "domain": [(-np.pi / 2 + SCHERK_ETA, np.pi / 2 - SCHERK_ETA)] * 2,
        "f": scherk, "fx": scherk_x, "fy": scherk_y, "fxy": scherk_xy,
    },
    "ball3d": {
        "dim": 3, "domain": [(0.0, 1.0)] * 3,
        "f": ball3d,
    },
}
