"""Trace diagnostics for quadratic pencils ``H0 + lam H1 + lam^2``.

Every identity here is evaluated along two algorithmically independent
routes (factorization trace against eigenvalue sum, companion trace against
the ``B``/``C`` block traces) so that agreement is a real check.

Notation: ``C = H0^{-1/2}`` and ``B = -H0^{-1/2} H1 H0^{-1/2}``; the
symmetrized companion ``A = [[0, H0^{1/2}], [-H0^{1/2}, -H1]]`` then has
``Tr(A^{-2}) = Tr(B^2) - 2 Tr(C^2)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from pencil_lab import linalg
from pencil_lab.config import DEFAULT_TOLERANCES, Tolerances
from pencil_lab.discretize import (
    HermiteBasis,
    PolynomialSpec,
    assemble_quadratic_pencil,
    kinetic_matrix,
    potential_matrix,
)
from pencil_lab.io import write_json
from pencil_lab.pencil import CompanionMatrix, PolynomialPencil, symmetrized_companion


class DivergentTraceError(ValueError):
    """The continuum trace being approximated does not exist."""


def schatten_threshold(n: int, m: int) -> float:
    """``n (m + 1) / m``: ``H0^{-1/2}`` lies in every Schatten class above it."""
    return n * (m + 1) / m


def weyl_exponent(n: int, m: int) -> float:
    """Growth exponent of ``E_j(H0)`` in ``j`` for ``H0 = -Laplacian + |x|^{2m}``."""
    return 2.0 / schatten_threshold(n, m)


@dataclass
class LidskiiResult:
    power: int
    factorization: complex
    eigen_sum: complex
    residual: float
    relative: float


def lidskii_check(A, power: int = 2) -> LidskiiResult:
    """Compare ``Tr(A^{-power})`` from LU against ``sum lam^{-power}`` from ``geev``."""
    M = A.matrix if isinstance(A, CompanionMatrix) else np.asarray(A)
    tr = linalg.inverse_power_trace(M, power)
    lam = linalg.eig_general(M, want_vectors=False).eigenvalues
    if np.any(lam == 0):
        raise linalg.SingularMatrixError("matrix has a zero eigenvalue")
    # sum smallest terms first
    terms = lam[::-1] ** (-float(power))
    es = complex(np.sum(terms))
    res = abs(tr - es)
    return LidskiiResult(power, tr, es, res, res / max(abs(tr), np.finfo(float).tiny))


def _bc_blocks(H0, H1, tol: Tolerances):
    C = linalg.inv_sqrt_pd(H0, tol)
    B = -C @ H1 @ C
    return B, C


@dataclass
class BCIdentity:
    tr_A2inv: complex
    tr_B2: float
    tr_C2: float
    residual: float
    relative: float


def bc_trace_identity(H0, H1, tol: Tolerances = DEFAULT_TOLERANCES) -> BCIdentity:
    pencil = PolynomialPencil((H0, H1))
    A = symmetrized_companion(pencil, tol)
    tr_a = linalg.inverse_power_trace(A.matrix, 2)
    B, C = _bc_blocks(np.asarray(H0), np.asarray(H1), tol)
    tr_b2 = float(np.real(np.sum(B * B.T)))
    tr_c2 = float(np.real(np.sum(C * C.T)))
    res = abs(tr_a - (tr_b2 - 2.0 * tr_c2))
    return BCIdentity(tr_a, tr_b2, tr_c2, res, res / max(abs(tr_a), np.finfo(float).tiny))


def _power_pencil_1d(m: int, basis: HermiteBasis) -> PolynomialPencil:
    if basis.n != 1:
        raise ValueError("this diagnostic is one-dimensional")
    return assemble_quadratic_pencil(basis, PolynomialSpec.monomial([m]))


@dataclass
class ScalingIdentity:
    m: int
    modes: int
    tr_x2m_H0inv2: float
    tr_H0inv: float
    residual: float
    relative: float


def scaling_identity_residual(m: int, basis: HermiteBasis) -> ScalingIdentity:
    """Residual of ``Tr(x^{2m} H0^{-2}) = Tr(H0^{-1}) / (m + 1)`` for ``H0 = D^2 + x^{2m}``.

    Differentiating ``Tr(D^2 + g x^{2m})^{-1} = g^{-1/(m+1)} Tr(D^2 + x^{2m})^{-1}``
    at ``g = 1`` gives the identity; it is a continuum statement, so the
    residual only decays with the basis size.
    """
    if m < 2:
        raise DivergentTraceError(
            f"Tr(H0^-1) diverges for m={m}: eigenvalues grow like j^(2m/(m+1)) and need exponent > 1"
        )
    if basis.n != 1:
        raise ValueError("scaling identity is implemented in one dimension")
    X2m = potential_matrix(basis, PolynomialSpec.monomial([2 * m]))
    H0 = kinetic_matrix(basis) + X2m
    Hinv = linalg.inverse(H0)
    tr_inv = float(np.trace(Hinv))
    lhs = float(np.sum((X2m @ Hinv) * Hinv.T))
    rhs = tr_inv / (m + 1)
    res = abs(lhs - rhs)
    return ScalingIdentity(m, basis.modes, lhs, tr_inv, res, res / abs(rhs))


def cauchy_schwarz_margin(H0, H1, m: int, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """``(4/(m+1)) Tr(C^2) - Tr(B^2)``; nonnegative for the ``x^m`` pencils."""
    B, C = _bc_blocks(np.asarray(H0), np.asarray(H1), tol)
    return float(4.0 / (m + 1) * np.real(np.sum(C * C.T)) - np.real(np.sum(B * B.T)))


@dataclass
class NegativityCertificate:
    m: int
    modes: int
    tr_A2inv: float
    tr_H0inv: float
    bound: float
    margin: float
    holds: bool


def negativity_certificate(m: int, basis: HermiteBasis, tol: Tolerances = DEFAULT_TOLERANCES) -> NegativityCertificate:
    """Check ``Tr(A^{-2}) <= (4/(m+1) - 2) Tr(H0^{-1}) < 0``.

    A strictly negative ``Tr(A^{-2})`` means the companion has eigenvalues,
    i.e. the pencil spectrum is not empty.
    """
    pen = _power_pencil_1d(m, basis)
    bc = bc_trace_identity(*pen.coeffs, tol=tol)
    tr_a = float(bc.tr_A2inv.real)
    bound = (4.0 / (m + 1) - 2.0) * bc.tr_C2
    margin = bound - tr_a
    return NegativityCertificate(m, basis.modes, tr_a, bc.tr_C2, bound, margin, bool(margin >= 0 and bound < 0 and tr_a < 0))


@dataclass
class WeylKyFanResult:
    k: int
    t: np.ndarray
    eigen_side: np.ndarray
    singular_side: np.ndarray

    @property
    def margins(self) -> np.ndarray:
        return self.singular_side - self.eigen_side


def _companion_for_sums(pencil_or_matrix, tol: Tolerances) -> np.ndarray:
    if isinstance(pencil_or_matrix, PolynomialPencil):
        return symmetrized_companion(pencil_or_matrix, tol).matrix
    if isinstance(pencil_or_matrix, CompanionMatrix):
        return pencil_or_matrix.matrix
    return np.asarray(pencil_or_matrix)


def weyl_kyfan_check(pencil_or_matrix, t_grid, k: int, tol: Tolerances = DEFAULT_TOLERANCES) -> WeylKyFanResult:
    """``sum (t + |lam_j|)^{-k}`` against ``sum (t + s_j)^{-k}``.

    For a pencil the symmetrized companion is used (its singular values
    are those of the linearized operator on the natural product space).
    This compares the two sums literally; the inequality ``eigen <= singular``
    is exact for normal matrices but is not implied by Weyl's majorization
    once ``t`` is large compared with the non-normal part of the spectrum.
    """
    A = _companion_for_sums(pencil_or_matrix, tol)
    lam = np.abs(linalg.eig_general(A, want_vectors=False).eigenvalues)
    s = linalg.singular_values(A)
    t = np.asarray(t_grid, dtype=float)
    lhs = np.array([np.sum(np.sort((tt + lam) ** (-float(k)))) for tt in t])
    rhs = np.array([np.sum(np.sort((tt + s) ** (-float(k)))) for tt in t])
    return WeylKyFanResult(k, t, lhs, rhs)


def resolvent_weyl_check(pencil_or_matrix, t_grid, k: int, tol: Tolerances = DEFAULT_TOLERANCES) -> WeylKyFanResult:
    """Weyl's inequality for ``(t + A)^{-1}``: ``sum |t + lam_j|^{-k} <= sum s_j((t + A)^{-1})^k``.

    Unlike :func:`weyl_kyfan_check` this holds for every matrix and ``k > 0``.
    """
    A = _companion_for_sums(pencil_or_matrix, tol)
    lam = linalg.eig_general(A, want_vectors=False).eigenvalues
    t = np.asarray(t_grid, dtype=float)
    lhs, rhs = [], []
    for tt in t:
        lhs.append(np.sum(np.sort(np.abs(tt + lam) ** (-float(k)))))
        s = linalg.singular_values(A + tt * np.eye(A.shape[0]))
        rhs.append(np.sum(np.sort(s ** (-float(k)))))
    return WeylKyFanResult(k, t, np.array(lhs), np.array(rhs))


@dataclass
class WeylFit:
    exponent: float
    target: float
    relative_error: float
    window: tuple


def converged_prefix(coarse, fine, rel: float = 1e-6) -> int:
    """Number of leading sorted eigenvalues that agree between two truncations."""
    coarse, fine = np.sort(np.real(coarse)), np.sort(np.real(fine))
    n = min(len(coarse), len(fine))
    bad = np.nonzero(np.abs(coarse[:n] - fine[:n]) > rel * np.abs(fine[:n]))[0]
    return int(bad[0]) if len(bad) else n


def weyl_law_fit(eigenvalues, m: int, n: int, window: tuple | None = None) -> WeylFit:
    """Log-log slope of ``E_j`` against ``j - 1/2`` over ``window`` (1-based, inclusive).

    The midpoint abscissa ``j - 1/2`` samples the counting staircase at the
    centre of each step; for the harmonic oscillator it makes the fit exact.
    """
    E = np.sort(np.real(np.asarray(eigenvalues)))
    if window is None:
        window = (max(1, len(E) // 10), len(E))
    lo, hi = window
    if hi - lo + 1 < 5:
        raise ValueError("too few converged eigenvalues for a Weyl-law fit")
    j = np.arange(lo, hi + 1)
    slope = np.polyfit(np.log(j - 0.5), np.log(E[lo - 1:hi]), 1)[0]
    target = weyl_exponent(n, m)
    return WeylFit(float(slope), target, abs(slope - target) / target, (int(lo), int(hi)))


def tail_estimate_inverse_trace(eigenvalues, n: int, m: int) -> float:
    """Estimate of ``sum_{j > N} 1/E_j`` from the fitted Weyl law, ``inf`` if divergent."""
    E = np.sort(np.real(np.asarray(eigenvalues)))
    beta = weyl_exponent(n, m)
    if beta <= 1:
        return float("inf")
    N = len(E)
    j = np.arange(max(1, N // 4), N // 2 + 1)
    c = np.exp(np.mean(np.log(E[j - 1]) - beta * np.log(j - 0.5)))
    return float(N ** (1 - beta) / (c * (beta - 1)))


@dataclass
class TraceReport:
    m: int
    modes: int
    tr_A2inv: complex
    tr_B2: float
    tr_C2: float
    tr_H0inv: float
    tr_x2m_H0inv2: float
    tr_H0inv_tail: float
    margins: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, path):
        return write_json(path, self.to_dict())


def trace_report(m: int, basis: HermiteBasis, tol: Tolerances = DEFAULT_TOLERANCES) -> TraceReport:
    pen = _power_pencil_1d(m, basis)
    H0, H1 = pen.coeffs
    bc = bc_trace_identity(H0, H1, tol)
    lid = lidskii_check(symmetrized_companion(pen, tol), 2)
    cert = negativity_certificate(m, basis, tol)
    cs = cauchy_schwarz_margin(H0, H1, m, tol)
    scal = scaling_identity_residual(m, basis)
    E = linalg.eig_selfadjoint(H0, tol.symmetry, want_vectors=False).eigenvalues
    return TraceReport(
        m=m,
        modes=basis.modes,
        tr_A2inv=bc.tr_A2inv,
        tr_B2=bc.tr_B2,
        tr_C2=bc.tr_C2,
        tr_H0inv=bc.tr_C2,
        tr_x2m_H0inv2=scal.tr_x2m_H0inv2,
        tr_H0inv_tail=tail_estimate_inverse_trace(E, 1, m),
        margins={"negativity": cert.margin, "cauchy_schwarz": cs, "bound": cert.bound},
        residuals={
            "bc_identity_relative": bc.relative,
            "lidskii_relative": lid.relative,
            "scaling_relative": scal.relative,
        },
        config={"basis_scale": basis.scale, "tolerances": tol.to_dict(), "both_sides": "matched truncation"},
    )


def h0_weyl_fit(P: PolynomialSpec, modes_pair, rel: float = 1e-6, tol: Tolerances = DEFAULT_TOLERANCES) -> WeylFit:
    """Weyl-law fit on the eigenvalues of ``H0 = -Laplacian + P^2`` that agree between two bases."""
    m = P.degree
    E = []
    for N in sorted(modes_pair):
        basis = HermiteBasis.for_degree(P.n, N, m, max_dim=tol.max_dim)
        H0 = kinetic_matrix(basis) + potential_matrix(basis, P * P, tol)
        E.append(linalg.eig_selfadjoint(H0, tol.symmetry, want_vectors=False).eigenvalues)
    k = converged_prefix(E[0], E[1], rel)
    return weyl_law_fit(E[1][:k], m, P.n)
