"""Built-in manufactured solutions for -Laplace(u) = f, u = g on the boundary.

All fields are vectorized over numpy arrays of x and y.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    u: callable          # exact solution u(x, y)
    grad_u: callable     # (du/dx, du/dy)
    f: callable          # -Laplace(u)
    description: str = ""

    def g(self, x, y):
        """Dirichlet data: the exact trace."""
        return self.u(x, y)


def _sinsin():
    pi = np.pi

    def u(x, y):
        return np.sin(pi * x) * np.sin(pi * y)

    def grad(x, y):
        return (pi * np.cos(pi * x) * np.sin(pi * y),
                pi * np.sin(pi * x) * np.cos(pi * y))

    def f(x, y):
        return 2.0 * pi ** 2 * np.sin(pi * x) * np.sin(pi * y)

    return ProblemSpec("sinsin", u, grad, f,
                       "u = sin(pi x) sin(pi y); homogeneous Dirichlet")


def _poly1():
    def u(x, y):
        return 1.0 + 2.0 * x - 3.0 * y

    def grad(x, y):
        return (np.full_like(np.asarray(x, dtype=float), 2.0),
                np.full_like(np.asarray(y, dtype=float), -3.0))

    def f(x, y):
        return np.zeros_like(np.asarray(x, dtype=float))

    return ProblemSpec("poly1", u, grad, f, "degree-1 patch test")


def _poly2():
    def u(x, y):
        return x ** 2 + x * y

    def grad(x, y):
        return (2.0 * x + y, np.asarray(x, dtype=float) * 1.0)

    def f(x, y):
        return np.full_like(np.asarray(x, dtype=float), -2.0)

    return ProblemSpec("poly2", u, grad, f, "degree-2 patch test")


def _poly3():
    def u(x, y):
        return x ** 3 + x ** 2 * y - y ** 3

    def grad(x, y):
        return (3.0 * x ** 2 + 2.0 * x * y, x ** 2 - 3.0 * y ** 2)

    def f(x, y):
        return -(6.0 * x + 2.0 * y - 6.0 * y)

    return ProblemSpec("poly3", u, grad, f, "degree-3 patch test")


def _runge():
    def w(x, y):
        return 1.0 + 25.0 * ((x - 0.5) ** 2 + (y - 0.5) ** 2)

    def u(x, y):
        return 1.0 / w(x, y)

    def grad(x, y):
        s = w(x, y) ** 2
        return (-50.0 * (x - 0.5) / s, -50.0 * (y - 0.5) / s)

    def f(x, y):
        r2 = (x - 0.5) ** 2 + (y - 0.5) ** 2
        return 100.0 / w(x, y) ** 2 - 5000.0 * r2 / w(x, y) ** 3

    return ProblemSpec("runge", u, grad, f, "steep rational bump, stress case")


PROBLEMS: dict[str, ProblemSpec] = {
    p.name: p for p in (_sinsin(), _poly1(), _poly2(), _poly3(), _runge())
}


def get_problem(name: str) -> ProblemSpec:
    try:
        return PROBLEMS[name]
    except KeyError:
        raise KeyError(
            f"unknown problem {name!r}; available: {', '.join(sorted(PROBLEMS))}"
        ) from None
