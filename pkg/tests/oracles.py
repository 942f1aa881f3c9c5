"""Independent reference computations used by the test suite."""

from __future__ import annotations

import numpy as np
import sympy as sp
from scipy import integrate, optimize
from scipy.optimize import linear_sum_assignment


def match_error(a, b, relative: bool = True) -> float:
    """Largest distance in the best one-to-one pairing of two multisets."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    assert a.shape == b.shape
    cost = np.abs(a[:, None] - b[None, :])
    if relative:
        cost = cost / (1.0 + np.abs(b)[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max()) if len(r) else 0.0


def charpoly_roots(M_int, digits: int = 30) -> np.ndarray:
    """Eigenvalues of an integer matrix as roots of its exact characteristic polynomial."""
    p = sp.Matrix(M_int).charpoly()
    return np.array([complex(r) for r in sp.Poly(p.as_expr(), p.gen).nroots(n=digits, maxsteps=200)])


def det_roots(coeffs_int, digits: int = 30) -> np.ndarray:
    """Roots of ``det(sum_j lam^j H_j + lam^k I)`` for integer blocks, via exact expansion."""
    lam = sp.symbols("lam")
    d = len(coeffs_int[0])
    L = sp.eye(d) * lam ** len(coeffs_int)
    for j, H in enumerate(coeffs_int):
        L += sp.Matrix(H) * lam**j
    poly = sp.Poly(sp.expand(L.det(method="berkowitz")), lam)
    return np.array([complex(r) for r in poly.nroots(n=digits, maxsteps=200)])


def normalized_hermite(t, nmax: int) -> np.ndarray:
    """``H_j(t) / sqrt(2^j j!)`` for ``j < nmax`` by the stable three-term recurrence."""
    t = np.asarray(t, dtype=float)
    h = np.zeros((nmax, len(t)))
    h[0] = 1.0
    if nmax > 1:
        h[1] = np.sqrt(2.0) * t
    for j in range(1, nmax - 1):
        h[j + 1] = np.sqrt(2.0 / (j + 1)) * t * h[j] - np.sqrt(j / (j + 1)) * h[j - 1]
    return h


def gauss_hermite_moment_matrix(f, nmax: int, scale: float = 1.0, nodes: int = 120) -> np.ndarray:
    """``<phi_j, f(x) phi_k>`` for the scale-``omega`` Hermite functions by Gauss-Hermite quadrature."""
    t, w = np.polynomial.hermite.hermgauss(nodes)
    h = normalized_hermite(t, nmax)
    x = t / np.sqrt(scale)
    return (h * (w * f(x))) @ h.T / np.sqrt(np.pi)


def _shoot(lam, parity: int, X: float) -> complex:
    """Mismatch at ``x = 0`` of the solution of ``-u'' + (x^2 - lam)^2 u = 0`` decaying at ``+inf``."""
    V = lambda x: (x * x - lam) ** 2

    def rhs(x, y):
        return [y[1], V(x) * y[0]]

    g = X * X - lam
    y0 = [1.0 + 0j, -(g + X / g)]
    sol = integrate.solve_ivp(rhs, (X, 0.0), y0, method="DOP853", rtol=1e-12, atol=1e-30)
    u, du = sol.y[:, -1]
    return du / u if parity == 0 else u / du


def shooting_eigenvalue(guess: complex, parity: int, X: float = 5.0) -> complex:
    """Eigenvalue of the ``x^2`` pencil near ``guess`` with an even (0) or odd (1) eigenfunction."""
    return complex(optimize.newton(lambda z: _shoot(z, parity, X), guess, tol=1e-13, maxiter=100))
