"""Symbol-level quantities: leading trace coefficients, phase laws, rescalings.

Two symbol variants are supported, distinguished by the eigenvalues of the
matrix symbol of the linearized operator:

* ``standard``: ``mu_pm(x, xi) = P(x) + 1 +- i|xi|``
* ``eta``:      ``mu_pm(x, xi) = P(x) +- i sqrt(1 + |xi|^2)``

Leading coefficients are reported with both branches summed,
``c0 = (2 pi)^{-n} int 2 Re(mu_+^s)``; the convention is recorded as
``BRANCH_CONVENTION`` in every exported row.

Quadrature uses Gauss-Legendre rules mapped to half-lines and lines; the
``xi`` integral is radial.  The error estimate is the difference between
two refinement levels plus a roundoff floor.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma, pi

import numpy as np
from scipy import integrate, special

from pencil_lab.discretize import PolynomialSpec
from pencil_lab.io import write_csv

BRANCH_CONVENTION = "both-branches"
THRESHOLD_CONSTANT = (3.0 - np.sqrt(2.0)) / 4.0
_CHUNK = 1024


class IntegrabilityError(ValueError):
    pass


class QuadratureError(RuntimeError):
    pass


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n (2 for n = 1)."""
    return 2.0 * pi ** (n / 2) / gamma(n / 2)


def power(z, s):
    """Principal branch ``z^s = exp(s log z)``, cut on (-inf, 0]."""
    return np.exp(s * np.log(np.asarray(z, dtype=complex)))


@dataclass(frozen=True)
class Rescaling:
    variant: str
    m: int
    parameter: float
    hbar: float
    scale: float
    shift: float

    def to_mu(self, lam):
        return lam / self.scale + self.shift

    def to_lambda(self, mu):
        return (mu - self.shift) * self.scale


def rescale_parameters(parameter: float, m: int, variant: str = "standard") -> Rescaling:
    """Semiclassical rescaling of the spectral parameter.

    ``standard``: ``x = tau y``, ``hbar = tau^{1-m}``, ``mu = lam / tau^m + 1``.
    ``eta``: ``hbar = eta^{-(m+1)/m}``, ``mu = lam / eta``.
    """
    if not parameter > 0:
        raise ValueError("rescaling parameter must be positive")
    if variant == "standard":
        return Rescaling(variant, m, parameter, parameter ** (1 - m), parameter**m, 1.0)
    if variant == "eta":
        return Rescaling(variant, m, parameter, parameter ** (-(m + 1) / m), parameter, 0.0)
    raise ValueError(f"unknown variant {variant!r}")


def f_s_closed(n: int, s: float) -> float:
    """``int_{R^n} (1 + |eta|)^s d eta = |S^{n-1}| B(n, -s-n)``."""
    if not s < -n:
        raise IntegrabilityError(f"f_s needs s < -n (got s={s}, n={n})")
    return sphere_area(n) * float(special.beta(n, -s - n))


def f_s_ratio(alpha, n: int, s: float) -> complex:
    """``f_s(alpha) = int_{R^n} (1 + alpha |eta|)^s d eta = alpha^{-n} f_s(1)`` on the principal branch."""
    alpha = complex(alpha)
    if alpha.imag == 0 and alpha.real <= 0:
        raise ValueError("alpha must avoid the cut (-inf, 0]")
    return complex(power(alpha, -n) * f_s_closed(n, s))


# --- quadrature rules -------------------------------------------------------

def _gl01(k: int):
    t, w = np.polynomial.legendre.leggauss(k)
    return 0.5 * (t + 1.0), 0.5 * w


def half_line_rule(k: int, length: float = 1.0):
    """Nodes/weights on (0, inf) via ``r = L t / (1 - t)``."""
    t, w = _gl01(k)
    r = length * t / (1.0 - t)
    return r, w * length / (1.0 - t) ** 2


def line_rule(k: int, length: float = 1.0):
    """Nodes/weights on R via ``x = L t / (1 - t^2)``."""
    t, w = np.polynomial.legendre.leggauss(k)
    x = length * t / (1.0 - t**2)
    return x, w * length * (1.0 + t**2) / (1.0 - t**2) ** 2


def box_rule(n: int, k: int, length: float = 1.0):
    x, w = line_rule(k, length)
    if n == 1:
        return x[:, None], w
    grids = np.meshgrid(*([x] * n), indexing="ij")
    wg = np.meshgrid(*([w] * n), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1), np.prod([g.ravel() for g in wg], axis=0)


def pairwise_sum(values) -> complex:
    """Deterministic pairwise reduction."""
    v = np.asarray(values, dtype=complex).ravel()
    while len(v) > 1:
        if len(v) % 2:
            v = np.append(v, 0.0)
        v = v[0::2] + v[1::2]
    return complex(v[0]) if len(v) else 0j


# --- symbols and coefficients ----------------------------------------------

@dataclass(frozen=True)
class SymbolPencil:
    P: PolynomialSpec
    Q: PolynomialSpec | None = None
    variant: str = "standard"

    def __post_init__(self):
        if self.variant not in ("standard", "eta"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if not self.P.is_elliptic_positive():
            raise ValueError("P must be elliptic-positive")

    @property
    def n(self) -> int:
        return self.P.n

    @property
    def m(self) -> int:
        return self.P.degree

    @property
    def theta(self) -> float:
        return self.n * (self.m + 1) / self.m

    def real_part(self, x) -> np.ndarray:
        """``Re mu_+`` as a function of ``x`` (before the ``xi`` term)."""
        base = self.P(x)
        return base + 1.0 if self.variant == "standard" else base

    def mu_plus(self, x, rho) -> np.ndarray:
        a = self.real_part(x)
        b = rho if self.variant == "standard" else np.sqrt(1.0 + rho**2)
        return a + 1j * b


@dataclass
class CoefficientResult:
    n: int
    m: int
    s: float
    variant: str
    value: complex
    single_branch: complex
    method: str
    error_estimate: float
    branch_convention: str = BRANCH_CONVENTION

    def row(self):
        return (self.n, self.m, self.s, self.variant, self.value.real, self.value.imag,
                self.error_estimate, self.method, self.branch_convention)


COEFFICIENT_HEADER = ["n", "m", "s", "variant", "re", "im", "err", "method", "branch_convention"]


def write_coefficients(path, results):
    return write_csv(path, COEFFICIENT_HEADER, (r.row() for r in results))


def _check_integrable(symbol: SymbolPencil, s: float):
    if not s < -symbol.theta:
        raise IntegrabilityError(f"need s < -n(m+1)/m = {-symbol.theta:.6g}, got s={s}")


def _symbol_integral(symbol: SymbolPencil, s: float, kx: int, kr: int, length: float = 1.0):
    """``int_{R^n} dx int_{R^n} dxi mu_+^s`` with a radial ``xi`` rule."""
    x, wx = box_rule(symbol.n, kx, length)
    r, wr = half_line_rule(kr, length)
    a_all = symbol.real_part(x)
    b = (r if symbol.variant == "standard" else np.sqrt(1.0 + r**2))[None, :]
    wr_j = (wr * r ** (symbol.n - 1))[None, :]
    partial, absum = [], 0.0
    for start in range(0, len(a_all), _CHUNK):
        a = a_all[start:start + _CHUNK, None]
        vals = wx[start:start + _CHUNK, None] * wr_j * power(a + 1j * b, s)
        partial.append(pairwise_sum(vals))
        absum += float(np.sum(np.abs(vals)))
    total = sphere_area(symbol.n) * pairwise_sum(partial)
    floor = 64 * np.finfo(float).eps * sphere_area(symbol.n) * absum
    return total, floor


def default_nodes(n: int) -> tuple:
    return {1: (160, 320), 2: (100, 200)}.get(n, (30, 60))


def symbol_integral(symbol: SymbolPencil, s: float, nodes: tuple | None = None, length: float = 1.0):
    """Single-branch phase-space integral with an error estimate."""
    nodes = nodes or default_nodes(symbol.n)
    i1, _ = _symbol_integral(symbol, s, nodes[0], nodes[0], length)
    i2, floor = _symbol_integral(symbol, s, nodes[1], nodes[1], length)
    return i2, abs(i2 - i1) + floor


def c0_quadrature(symbol: SymbolPencil, s: float, nodes: tuple | None = None, max_error: float = 1e-3) -> CoefficientResult:
    """Leading trace coefficient by direct phase-space quadrature."""
    _check_integrable(symbol, s)
    total, err = symbol_integral(symbol, s, nodes)
    norm = (2 * pi) ** (-symbol.n)
    single = norm * total
    value = complex(2.0 * single.real, 0.0)
    err = 2.0 * norm * err
    if not np.isfinite(err) or err > max_error * max(abs(single), 1e-300):
        raise QuadratureError(f"quadrature did not converge (error estimate {err:.3e})")
    return CoefficientResult(symbol.n, symbol.m, s, symbol.variant, value, single, "quadrature", err)


def x_integral(P: PolynomialSpec, exponent: float, shift: float = 1.0) -> float:
    """``int_{R^n} (P(x) + shift)^exponent dx`` with adaptive scipy quadrature."""
    n = P.n

    def f(*x):
        return (P(np.array(x)) + shift) ** exponent

    val, _ = integrate.nquad(f, [(-np.inf, np.inf)] * n, opts={"epsabs": 0, "epsrel": 1e-11, "limit": 200})
    return float(val)


def c0_closed_form(symbol: SymbolPencil, s: float) -> CoefficientResult:
    """Factorized route: ``int (P+1)^{s+n} dx * f_s(i)``, with ``f_s(i) = i^{-n} f_s(1)``."""
    if symbol.variant != "standard":
        raise ValueError("closed form is available for the standard variant")
    _check_integrable(symbol, s)
    n = symbol.n
    X = x_integral(symbol.P, s + n, 1.0)
    single = (2 * pi) ** (-n) * X * f_s_ratio(1j, n, s)
    return CoefficientResult(n, symbol.m, s, symbol.variant, complex(2.0 * single.real, 0.0), single, "closed-form", 0.0)


def c0_truncated(symbol: SymbolPencil, s: float, radius: float, k: int = 200) -> complex:
    """Single-branch integral over ``|x_i| <= radius``, ``|xi| <= radius`` (no integrability guard)."""
    t, w = np.polynomial.legendre.leggauss(k)
    x1, w1 = radius * t, radius * w
    if symbol.n == 1:
        x, wx = x1[:, None], w1
    else:
        g = np.meshgrid(*([x1] * symbol.n), indexing="ij")
        gw = np.meshgrid(*([w1] * symbol.n), indexing="ij")
        x = np.stack([a.ravel() for a in g], axis=1)
        wx = np.prod([a.ravel() for a in gw], axis=0)
    r, wr = 0.5 * radius * (t + 1.0), 0.5 * radius * w
    a = symbol.real_part(x)[:, None]
    b = (r if symbol.variant == "standard" else np.sqrt(1.0 + r**2))[None, :]
    f = power(a + 1j * b, s) * (r ** (symbol.n - 1))[None, :]
    return (2 * pi) ** (-symbol.n) * sphere_area(symbol.n) * pairwise_sum(wx[:, None] * wr[None, :] * f)


# --- eta variant phase law --------------------------------------------------

def predicted_phase(n: int, m: int, s: float) -> float:
    return (n + s * m) * pi / (2 * m)


def _mod_pi(a: float) -> float:
    """Representative of ``a`` modulo pi in (-pi/2, pi/2]."""
    r = (a + pi / 2) % pi - pi / 2
    return r if r != -pi / 2 else pi / 2


@dataclass
class PhaseCheck:
    n: int
    m: int
    s: float
    integral: complex
    error_estimate: float
    measured_phase: float
    predicted_phase: float
    phase_error: float
    gamma_s: float

    @property
    def coefficient(self) -> float:
        """Both-branch leading coefficient ``(2 pi)^{-n} 2 Re J``."""
        return 2.0 * (2 * pi) ** (-self.n) * self.integral.real


def eta_phase_check(n: int, m: int, s: float, P: PolynomialSpec | None = None, nodes: tuple | None = None) -> PhaseCheck:
    """Argument of ``int (P(x) + i sqrt(1 + |xi|^2))^s`` against ``(n + s m) pi / (2m)`` mod pi."""
    if P is None:
        P = PolynomialSpec.monomial([m]) if n == 1 else PolynomialSpec.radial(n, m)
    symbol = SymbolPencil(P, variant="eta")
    if symbol.m != m:
        raise ValueError("degree of P does not match m")
    _check_integrable(symbol, s)
    J, err = symbol_integral(symbol, s, nodes)
    meas = float(np.angle(J))
    pred = predicted_phase(n, m, s)
    return PhaseCheck(n, m, s, J, err, meas, pred, abs(_mod_pi(meas - pred)),
                      2.0 * (2 * pi) ** (-n) * abs(J))


def first_nonvanishing_s(n: int, m: int, s_grid=None, P: PolynomialSpec | None = None):
    """Scan admissible exponents; return the first whose coefficient is resolved away from zero."""
    theta = n * (m + 1) / m
    if s_grid is None:
        s_grid = -theta - 0.25 - 0.25 * np.arange(16)
    for s in s_grid:
        if not s < -theta:
            continue
        chk = eta_phase_check(n, m, float(s), P)
        if abs(chk.integral.real) > 10 * chk.error_estimate:
            return float(s), chk
    return None, None


# --- technical (P, Q) condition --------------------------------------------

@dataclass
class ConditionScan:
    classification: str
    min_value: float
    max_value: float
    witnesses: dict


def pq_ratio(P: PolynomialSpec, Q: PolynomialSpec | None, x) -> np.ndarray:
    p1 = P(x) + 1.0
    q = Q(x) if Q is not None else 0.0
    return p1**2 / (p1**2 + q**2) - THRESHOLD_CONSTANT


def pq_condition_scan(P: PolynomialSpec, Q: PolynomialSpec | None = None, box: float = 10.0,
                      grid: int = 41, radii=(0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 1e3), sphere: int = 256,
                      seed: int = 0) -> ConditionScan:
    """Sign classification of ``(P+1)^2/((P+1)^2+Q^2) - (3 - sqrt 2)/4`` on a sample set."""
    n = P.n
    axis = np.linspace(-box, box, grid)
    pts = [np.stack([g.ravel() for g in np.meshgrid(*([axis] * n), indexing="ij")], axis=1)]
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((sphere, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    if n == 1:
        dirs = np.array([[1.0], [-1.0]])
    pts += [r * dirs for r in radii]
    X = np.vstack(pts)
    v = pq_ratio(P, Q, X)
    lo, hi = int(np.argmin(v)), int(np.argmax(v))
    if v[lo] >= 0:
        cls = "all_nonneg"
    elif v[hi] <= 0:
        cls = "all_nonpos"
    else:
        cls = "mixed"
    witnesses = {"min": X[lo].tolist(), "max": X[hi].tolist()}
    return ConditionScan(cls, float(v[lo]), float(v[hi]), witnesses)
