"""Shared fixtures and reference integrators for the test suite."""

import numpy as np
import pytest

from exprk.tableau import exprk5s8, get_tableau
from exprk.testbed import heat_problem


def rk_integrate(bt, f, u0, t0, t_end, n_steps):
    """Reference classical explicit RK driver over a ButcherTableau.

    Deliberately written from the textbook k-stage formulas, sharing no code
    with the exponential stepper, so agreement between the two is evidence
    rather than tautology.
    """
    a = [[float(x) for x in row] for row in bt.a]
    b = [float(x) for x in bt.b]
    c = [float(x) for x in bt.c]
    s = len(b)
    u = np.asarray(u0, dtype=float).copy()
    h = (t_end - t0) / n_steps
    for k in range(n_steps):
        tn = t0 + k * h
        slopes = []
        for i in range(s):
            ui = u.copy()
            for j in range(i):
                if a[i][j] != 0.0:
                    ui = ui + (h * a[i][j]) * slopes[j]
            slopes.append(np.asarray(f(tn + c[i] * h, ui), dtype=float))
        for i in range(s):
            if b[i] != 0.0:
                u = u + (h * b[i]) * slopes[i]
    return u


@pytest.fixture(scope="session")
def tab5():
    return exprk5s8()


@pytest.fixture(scope="session")
def all_tableaux():
    return [get_tableau(name) for name in ("expRK5s8", "expEuler", "expRK2s2")]


@pytest.fixture(scope="session")
def heat200():
    return heat_problem(200)
