"""Hermite-function Galerkin matrices for -Laplacian, polynomial potentials and pencils.

The basis on each axis is the eigenbasis of the scaled oscillator
``D^2 + scale^2 x^2``.  Multi-dimensional bases are tensor products, with the
first axis varying slowest (``np.kron`` order).

Matrices of polynomial multipliers are exact Galerkin matrices: powers of the
tridiagonal position matrix are formed in a basis enlarged by the power and
then truncated, so no boundary pollution reaches the kept block.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from functools import reduce
from itertools import product

import numpy as np

from pencil_lab.config import DEFAULT_TOLERANCES, Tolerances
from pencil_lab.pencil import PolynomialPencil


class DiscretizationError(ValueError):
    pass


class EllipticityWarning(UserWarning):
    pass


def default_scale(modes: int, m: int) -> float:
    """Basis scale balancing position and momentum truncation for degree ``m``."""
    return float(modes) ** ((m - 1) / (m + 1))


@dataclass(frozen=True)
class HermiteBasis:
    n: int
    modes: int
    scale: float = 1.0
    max_dim: int = DEFAULT_TOLERANCES.max_dim

    def __post_init__(self):
        if self.n < 1:
            raise DiscretizationError("dimension must be >= 1")
        if self.modes < 2:
            raise DiscretizationError("need at least 2 modes per axis")
        if not self.scale > 0:
            raise DiscretizationError("basis scale must be positive")
        if self.dim > self.max_dim:
            raise DiscretizationError(
                f"basis dimension {self.dim} exceeds the cap {self.max_dim}"
            )

    @property
    def dim(self) -> int:
        return self.modes**self.n

    @classmethod
    def for_degree(cls, n: int, modes: int, m: int, factor: float = 1.0, **kw) -> "HermiteBasis":
        return cls(n, modes, factor * default_scale(modes, m), **kw)


@dataclass(frozen=True)
class PolynomialSpec:
    """Real polynomial in ``n`` variables as a tuple of ``(exponents, coef)``."""

    n: int
    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        merged: dict[tuple, float] = {}
        for exp, coef in self.terms:
            exp = tuple(int(e) for e in exp)
            if len(exp) != self.n or min(exp, default=0) < 0:
                raise DiscretizationError(f"bad exponent {exp} for n={self.n}")
            merged[exp] = merged.get(exp, 0.0) + float(coef)
        clean = tuple(sorted((e, c) for e, c in merged.items() if c != 0.0))
        object.__setattr__(self, "terms", clean)

    @property
    def degree(self) -> int:
        return max((sum(e) for e, _ in self.terms), default=0)

    @classmethod
    def from_json(cls, data, n: int | None = None) -> "PolynomialSpec":
        """Parse ``[{"exp": [2, 0], "coef": 1.0}, ...]`` (a JSON string or list)."""
        if isinstance(data, str):
            data = json.loads(data)
        if not data:
            if n is None:
                raise DiscretizationError("empty monomial list needs an explicit dimension")
            return cls(n, ())
        dims = {len(t["exp"]) for t in data}
        if len(dims) != 1 or (n is not None and dims != {n}):
            raise DiscretizationError("inconsistent monomial dimensions")
        return cls(dims.pop(), tuple((tuple(t["exp"]), t["coef"]) for t in data))

    def to_json(self) -> list:
        return [{"exp": list(e), "coef": c} for e, c in self.terms]

    @classmethod
    def monomial(cls, exp, coef: float = 1.0) -> "PolynomialSpec":
        return cls(len(exp), ((tuple(exp), coef),))

    @classmethod
    def power_sum(cls, n: int, m: int) -> "PolynomialSpec":
        """``sum_i x_i^m``."""
        return cls(n, tuple((tuple(m if j == i else 0 for j in range(n)), 1.0) for i in range(n)))

    @classmethod
    def radial(cls, n: int, m: int) -> "PolynomialSpec":
        """``|x|^m`` for even ``m``, expanded by the multinomial theorem."""
        if m % 2:
            raise DiscretizationError("|x|^m is a polynomial only for even m")
        out = cls(n, ((tuple([0] * n), 1.0),))
        sq = cls.power_sum(n, 2)
        for _ in range(m // 2):
            out = out * sq
        return out

    def __add__(self, other: "PolynomialSpec") -> "PolynomialSpec":
        return PolynomialSpec(self.n, self.terms + other.terms)

    def __mul__(self, other):
        if not isinstance(other, PolynomialSpec):
            return PolynomialSpec(self.n, tuple((e, c * float(other)) for e, c in self.terms))
        if other.n != self.n:
            raise DiscretizationError("dimension mismatch")
        terms = [
            (tuple(a + b for a, b in zip(e1, e2)), c1 * c2)
            for (e1, c1), (e2, c2) in product(self.terms, other.terms)
        ]
        return PolynomialSpec(self.n, tuple(terms))

    __rmul__ = __mul__

    def homogeneous_part(self, degree: int | None = None) -> "PolynomialSpec":
        d = self.degree if degree is None else degree
        return PolynomialSpec(self.n, tuple((e, c) for e, c in self.terms if sum(e) == d))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        out = np.zeros(x.shape[:-1])
        for exp, coef in self.terms:
            out = out + coef * np.prod(x ** np.array(exp), axis=-1)
        return out

    def is_elliptic_positive(self, samples: int = 2000, seed: int = 0) -> bool:
        """Sampled check that the top homogeneous part is positive on the unit sphere."""
        if self.degree == 0:
            return False
        rng = np.random.default_rng(seed)
        # coordinate axes and diagonals catch the usual degenerate directions
        special = np.array(list(product((-1.0, 0.0, 1.0), repeat=self.n))) if self.n <= 6 else np.eye(self.n)
        special = special[np.any(special != 0, axis=1)]
        pts = np.vstack([rng.standard_normal((samples, self.n)), special])
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        return bool(np.all(self.homogeneous_part()(pts) > 0))

    def is_even(self) -> bool:
        return all(sum(e) % 2 == 0 for e, _ in self.terms)


def _position_1d(modes: int, scale: float) -> np.ndarray:
    off = np.sqrt(np.arange(1, modes) / (2.0 * scale))
    return np.diag(off, 1) + np.diag(off, -1)


def position_power_1d(modes: int, scale: float, power: int, max_degree: int = DEFAULT_TOLERANCES.max_degree) -> np.ndarray:
    """Exact Galerkin matrix of ``x^power`` on the first ``modes`` Hermite functions."""
    if power < 0:
        raise DiscretizationError("power must be nonnegative")
    if power > max_degree:
        raise DiscretizationError(f"power {power} exceeds the degree cap {max_degree}")
    if power == 0:
        return np.eye(modes)
    X = _position_1d(modes + power, scale)
    return np.linalg.matrix_power(X, power)[:modes, :modes]


def kinetic_1d(modes: int, scale: float) -> np.ndarray:
    """Exact Galerkin matrix of ``D^2 = -d^2/dx^2``."""
    j = np.arange(modes)
    K = np.diag(scale * (j + 0.5))
    off = -0.5 * scale * np.sqrt((j[:-2] + 1.0) * (j[:-2] + 2.0))
    return K + np.diag(off, 2) + np.diag(off, -2)


def _embed(basis: HermiteBasis, factors: dict[int, np.ndarray]) -> np.ndarray:
    eye = np.eye(basis.modes)
    mats = [factors.get(a, eye) for a in range(basis.n)]
    return reduce(np.kron, mats)


def position_matrix(basis: HermiteBasis, axis: int, power: int = 1, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    if not 0 <= axis < basis.n:
        raise DiscretizationError(f"axis {axis} out of range for n={basis.n}")
    if power < 1:
        raise DiscretizationError("power must be >= 1")
    X = position_power_1d(basis.modes, basis.scale, power, tol.max_degree)
    return _embed(basis, {axis: X})


def kinetic_matrix(basis: HermiteBasis) -> np.ndarray:
    """``-Laplacian`` as a Kronecker sum of 1D kinetic matrices."""
    K1 = kinetic_1d(basis.modes, basis.scale)
    return sum(_embed(basis, {a: K1}) for a in range(basis.n))


def potential_matrix(basis: HermiteBasis, P: PolynomialSpec, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Galerkin matrix of multiplication by ``P(x)``."""
    if P.n != basis.n:
        raise DiscretizationError(f"polynomial in {P.n} variables, basis has n={basis.n}")
    if P.degree > tol.max_degree:
        raise DiscretizationError(f"degree {P.degree} exceeds the cap {tol.max_degree}")
    cache: dict[int, np.ndarray] = {}

    def xpow(p):
        if p not in cache:
            cache[p] = position_power_1d(basis.modes, basis.scale, p, tol.max_degree)
        return cache[p]

    out = np.zeros((basis.dim, basis.dim))
    for exp, coef in P.terms:
        out += coef * _embed(basis, {a: xpow(e) for a, e in enumerate(exp) if e})
    return out


def assemble_quadratic_pencil(
    basis: HermiteBasis,
    P: PolynomialSpec,
    Q: PolynomialSpec | None = None,
    eta: float = 0.0,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> PolynomialPencil:
    """Discretize ``-Laplacian + (P(x) - lambda)^2 + Q(x)^2 + eta^2``.

    ``H0`` uses the Galerkin matrix of the polynomial ``P^2`` (not the square
    of the matrix of ``P``), so it is exact on the truncated basis.
    """
    if eta < 0:
        raise DiscretizationError("eta must be nonnegative")
    if basis.n > 1 and not P.is_elliptic_positive():
        warnings.warn("P does not look elliptic-positive", EllipticityWarning, stacklevel=2)
    V = P * P
    if Q is not None and Q.terms:
        V = V + Q * Q
    H0 = kinetic_matrix(basis) + potential_matrix(basis, V, tol) + eta**2 * np.eye(basis.dim)
    H1 = -2.0 * potential_matrix(basis, P, tol)
    return PolynomialPencil((H0, H1), basis=basis, hermitian=True)


def assemble_general_pencil(H, k: int | None = None, basis: HermiteBasis | None = None) -> PolynomialPencil:
    """Monic pencil ``H0 + lambda H1 + ... + lambda^{k-1} H_{k-1} + lambda^k``."""
    H = [np.atleast_2d(np.asarray(h)) for h in H]
    if k is not None and len(H) != k:
        raise DiscretizationError(f"expected {k} coefficient matrices, got {len(H)}")
    return PolynomialPencil(tuple(H), basis=basis)
