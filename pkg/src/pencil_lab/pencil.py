"""Monic polynomial pencils and their companion linearization.

A pencil of degree ``k`` is ``L(lam) = H0 + lam H1 + ... + lam^{k-1} H_{k-1} + lam^k I``.
Its eigenvalues are the eigenvalues of the block companion matrix whose
superdiagonal blocks are identities and whose last block row is
``(-H0, -H1, ..., -H_{k-1})``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import factorial

import numpy as np

from pencil_lab import linalg
from pencil_lab.config import DEFAULT_TOLERANCES, Tolerances
from pencil_lab.io import write_csv


class PencilError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PolynomialPencil:
    coeffs: tuple
    basis: object = None
    hermitian: bool = False

    def __post_init__(self):
        if len(self.coeffs) < 1:
            raise PencilError("pencil needs at least one coefficient matrix")
        mats = []
        for H in self.coeffs:
            H = np.array(np.atleast_2d(H))
            H.setflags(write=False)
            mats.append(H)
        d = mats[0].shape[0]
        if any(H.shape != (d, d) for H in mats):
            raise PencilError("coefficient matrices must be square of a common dimension")
        object.__setattr__(self, "coeffs", tuple(mats))

    @property
    def k(self) -> int:
        return len(self.coeffs)

    @property
    def d(self) -> int:
        return self.coeffs[0].shape[0]

    @property
    def is_real(self) -> bool:
        return all(np.isrealobj(H) or not np.any(H.imag) for H in self.coeffs)

    def __call__(self, lam) -> np.ndarray:
        return evaluate(self, lam)

    def derivative(self, lam, order: int) -> np.ndarray:
        """``d^order L / d lam^order`` at ``lam``."""
        k, d = self.k, self.d
        out = np.zeros((d, d), dtype=complex)
        if order > k:
            return out
        out += factorial(k) / factorial(k - order) * lam ** (k - order) * np.eye(d)
        for j in range(order, k):
            out += factorial(j) / factorial(j - order) * lam ** (j - order) * self.coeffs[j]
        return out


@dataclass(frozen=True, eq=False)
class CompanionMatrix:
    matrix: np.ndarray
    k: int
    d: int
    flavor: str = "raw"

    def block(self, i: int, j: int) -> np.ndarray:
        d = self.d
        return self.matrix[i * d:(i + 1) * d, j * d:(j + 1) * d]


@dataclass
class KeldyshChain:
    anchor: complex
    vectors: list
    residuals: list

    def __len__(self) -> int:
        return len(self.vectors)


@dataclass
class Spectrum:
    """Pencil eigenvalues in (modulus, argument) order.

    ``sigma_min_ratio`` holds, per eigenvalue, an upper bound on
    ``sigma_min(L(lam)) / sigma_max(L(lam))`` (NaN when not certified).
    """

    eigenvalues: np.ndarray
    multiplicity: np.ndarray
    sigma_min_ratio: np.ndarray
    residual_bound: float = 0.0
    vectors: np.ndarray | None = None
    converged: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.eigenvalues)

    def converged_values(self) -> np.ndarray:
        if self.converged is None:
            raise PencilError("spectrum has no convergence flags; use converged_spectrum")
        return self.eigenvalues[self.converged]

    def rows(self):
        conv = self.converged if self.converged is not None else np.zeros(len(self), bool)
        for lam, mult, c, r in zip(self.eigenvalues, self.multiplicity, conv, self.sigma_min_ratio):
            yield (lam.real, lam.imag, abs(lam), mult, bool(c), r)

    def to_csv(self, path):
        header = ["re", "im", "modulus", "multiplicity", "converged_flag", "sigma_min_ratio"]
        return write_csv(path, header, self.rows())


def evaluate(pencil: PolynomialPencil, lam) -> np.ndarray:
    """``L(lam)`` by Horner's rule."""
    d = pencil.d
    M = np.eye(d, dtype=complex if np.iscomplexobj(lam) else float)
    for H in reversed(pencil.coeffs):
        M = M * lam + H
    return M


def companion(pencil: PolynomialPencil) -> CompanionMatrix:
    k, d = pencil.k, pencil.d
    dtype = np.result_type(*pencil.coeffs, float)
    A = np.zeros((k * d, k * d), dtype=dtype)
    for i in range(k - 1):
        A[i * d:(i + 1) * d, (i + 1) * d:(i + 2) * d] = np.eye(d)
    for j, H in enumerate(pencil.coeffs):
        A[(k - 1) * d:, j * d:(j + 1) * d] = -H
    return CompanionMatrix(A, k, d, "raw")


def symmetrized_companion(pencil: PolynomialPencil, tol: Tolerances = DEFAULT_TOLERANCES) -> CompanionMatrix:
    """``[[0, H0^{1/2}], [-H0^{1/2}, -H1]]`` for a quadratic pencil with ``H0`` positive definite."""
    if pencil.k != 2:
        raise PencilError("symmetrized companion is defined for quadratic pencils only")
    H0, H1 = pencil.coeffs
    if linalg.eig_selfadjoint(H0, tol.symmetry, want_vectors=False).eigenvalues[0] <= 0:
        raise PencilError("H0 is not positive definite")
    R = linalg.sqrt_psd(H0, tol)
    d = pencil.d
    A = np.zeros((2 * d, 2 * d), dtype=np.result_type(R, H1))
    A[:d, d:] = R
    A[d:, :d] = -R
    A[d:, d:] = -H1
    return CompanionMatrix(A, 2, d, "symmetrized-quadratic")


def sigma_min_ratio(pencil: PolynomialPencil, lam) -> float:
    """Exact ``sigma_min / sigma_max`` of ``L(lam)``."""
    s = linalg.singular_values(evaluate(pencil, lam))
    return float(s[-1] / s[0]) if s[0] > 0 else 0.0


def _ratio_bound(pencil: PolynomialPencil, lam, u) -> float:
    # sigma_min <= |L u| / |u| ; sigma_max >= max(col norm, |L|_F / sqrt(d))
    L = evaluate(pencil, lam)
    cols = np.linalg.norm(L, axis=0)
    smax_lo = max(cols.max(), np.sqrt(np.sum(cols**2) / pencil.d))
    if smax_lo == 0:
        return 0.0
    return float(np.linalg.norm(L @ u) / (np.linalg.norm(u) * smax_lo))


def pencil_spectrum(
    pencil: PolynomialPencil,
    want_vectors: bool = False,
    certify: bool = True,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> Spectrum:
    """All ``k*d`` eigenvalues of the pencil via its raw companion matrix.

    With ``certify`` (or ``want_vectors``) the companion eigenvectors are
    computed and each eigenvalue gets a cheap rigorous upper bound on
    ``sigma_min(L)/sigma_max(L)`` from its eigenvector.
    """
    kd = pencil.k * pencil.d
    if kd > 2 * tol.max_dim:
        raise PencilError(f"companion dimension {kd} exceeds the cap {2 * tol.max_dim}")
    A = companion(pencil).matrix
    need_vec = want_vectors or certify
    dec = linalg.eig_general(A, want_vectors=need_vec)
    lam = dec.eigenvalues
    vecs = None
    ratios = np.full(len(lam), np.nan)
    if need_vec:
        vecs = dec.vectors[: pencil.d, :]
        norms = np.linalg.norm(vecs, axis=0)
        vecs = vecs / np.where(norms > 0, norms, 1.0)
        if certify:
            ratios = np.array([_ratio_bound(pencil, z, vecs[:, i]) for i, z in enumerate(lam)])
    return Spectrum(
        eigenvalues=lam,
        multiplicity=linalg.multiplicities(lam, tol.cluster),
        sigma_min_ratio=ratios,
        residual_bound=dec.residual_bound,
        vectors=vecs if want_vectors else None,
    )


def converged_mask(fine, coarse, tol: float = DEFAULT_TOLERANCES.converged) -> np.ndarray:
    """Flag entries of ``fine`` within ``tol * (1 + |lam|)`` of some entry of ``coarse``."""
    fine = np.asarray(fine, dtype=complex)
    coarse = np.asarray(coarse, dtype=complex)
    if len(coarse) == 0:
        return np.zeros(len(fine), bool)
    dist = np.empty(len(fine))
    for start in range(0, len(fine), 512):
        chunk = fine[start:start + 512]
        dist[start:start + 512] = np.min(np.abs(chunk[:, None] - coarse[None, :]), axis=1)
    return dist < tol * (1.0 + np.abs(fine))


def converged_spectrum(build, modes_pair, tol: Tolerances = DEFAULT_TOLERANCES, certify: bool = False) -> Spectrum:
    """Spectrum at the finer of two basis sizes, flagged by the convergence filter.

    ``build(modes)`` must return a :class:`PolynomialPencil`.
    """
    lo, hi = sorted(modes_pair)
    coarse = pencil_spectrum(build(lo), certify=False, tol=tol)
    fine = pencil_spectrum(build(hi), certify=certify, tol=tol)
    fine.converged = converged_mask(fine.eigenvalues, coarse.eigenvalues, tol.converged)
    return fine


def chain_residuals(pencil: PolynomialPencil, lam0, vectors, factorial_normalization: bool = False) -> list:
    """Relative residual of each chain equation.

    Equation ``j`` is ``sum_{p<=j} c_p L^{(p)}(lam0) u_{j-p} = 0`` with
    ``c_p = 1`` (as printed) or ``c_p = 1/p!`` (Jordan-chain convention).
    The residual is ``|sum| / sum |c_p L^{(p)}| |u_{j-p}|``.
    """
    derivs = [pencil.derivative(lam0, p) for p in range(len(vectors))]
    out = []
    for j in range(len(vectors)):
        acc = np.zeros(pencil.d, dtype=complex)
        scale = 0.0
        for p in range(j + 1):
            c = 1.0 / factorial(p) if factorial_normalization else 1.0
            acc += c * derivs[p] @ vectors[j - p]
            scale += c * np.linalg.norm(derivs[p], 2) * np.linalg.norm(vectors[j - p])
        out.append(float(np.linalg.norm(acc) / scale) if scale > 0 else 0.0)
    return out


def _null_basis(M, thr) -> np.ndarray:
    _, s, Vh = np.linalg.svd(M)
    return Vh[s <= thr].conj().T


def _orth(V, thr=1e-10) -> np.ndarray:
    if V.shape[1] == 0:
        return V
    U, s, _ = np.linalg.svd(V, full_matrices=False)
    return U[:, s > thr * max(s[0], 1e-300)]


def keldysh_chains(pencil: PolynomialPencil, lam0, tol: Tolerances = DEFAULT_TOLERANCES) -> list[KeldyshChain]:
    """Keldysh chains at ``lam0`` from the Jordan structure of the companion.

    The anchor is refined to the mean of the eigenvalue cluster containing
    ``lam0``; nested kernels of ``(A - lam0)^j`` are found by SVD with rank
    threshold ``tol.rank * |A - lam0|^j`` and the first block components of
    the resulting Jordan chains are returned.
    """
    comp = companion(pencil)
    A = comp.matrix
    w = linalg.eig_general(A, want_vectors=False).eigenvalues
    idx = int(np.argmin(np.abs(w - lam0)))
    if abs(w[idx] - lam0) > tol.cluster * (1 + abs(lam0)):
        raise PencilError(f"{lam0} is not near the pencil spectrum")
    groups = linalg.cluster_eigenvalues(w, tol.cluster)
    group = next(g for g in groups if idx in g)
    alg = len(group)
    lam0 = complex(np.mean(w[group]))

    N = A - lam0 * np.eye(A.shape[0])
    nN = np.linalg.norm(N, 2)
    kernels = [np.zeros((A.shape[0], 0), dtype=complex)]
    Np = np.eye(A.shape[0], dtype=complex)
    for p in range(1, alg + 1):
        Np = Np @ N
        K = _null_basis(Np, tol.rank * max(nN, 1.0) ** p)
        if K.shape[1] <= kernels[-1].shape[1]:
            break
        kernels.append(K)
        if K.shape[1] >= alg:
            break
    top = len(kernels) - 1
    if kernels[top].shape[1] != alg:
        warnings.warn(
            f"Jordan extraction at {lam0}: kernel dimension {kernels[top].shape[1]} "
            f"!= algebraic multiplicity {alg}", RuntimeWarning, stacklevel=2,
        )

    tops: list[tuple[int, np.ndarray]] = []
    for p in range(top, 0, -1):
        existing = [kernels[p - 1]]
        for level, wv in tops:
            existing.append((np.linalg.matrix_power(N, level - p) @ wv)[:, None])
        E = _orth(np.hstack(existing)) if sum(e.shape[1] for e in existing) else existing[0]
        K = kernels[p]
        R = K - E @ (E.conj().T @ K) if E.shape[1] else K
        # K is orthonormal, so an absolute cut separates new directions from noise
        U, sv, _ = np.linalg.svd(R, full_matrices=False)
        new = U[:, sv > 1e-6]
        for c in range(new.shape[1]):
            tops.append((p, new[:, c]))

    d = comp.d
    chains = []
    for level, wv in tops:
        vs = [np.linalg.matrix_power(N, level - 1 - j) @ wv for j in range(level)]
        us = [v[:d] for v in vs]
        s = np.linalg.norm(us[0])
        if s == 0:
            continue
        us = [u / s for u in us]
        res = chain_residuals(pencil, lam0, us, tol.factorial_normalization)
        chains.append(KeldyshChain(lam0, us, res))
    chains.sort(key=len, reverse=True)
    return chains


def resolvent_norm(pencil: PolynomialPencil, lam, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """``|L(lam)^{-1}| = 1/sigma_min``; ``inf`` when ``sigma_min`` is below the floor.

    The floor is relative to ``sum_j |lam|^j |H_j| + |lam|^k``, the natural
    size of ``L(lam)`` (``sigma_max`` of ``L(lam)`` itself vanishes at an
    eigenvalue of a scalar pencil).
    """
    s = linalg.singular_values(evaluate(pencil, lam))
    r = abs(lam)
    scale = max(s[0], sum(r**j * np.linalg.norm(H, 2) for j, H in enumerate(pencil.coeffs)) + r**pencil.k)
    if s[-1] <= tol.sigma_floor * scale:
        return float("inf")
    return float(1.0 / s[-1])


@dataclass
class RayFit:
    angle: float
    slope: float
    intercept: float
    residual: float
    radii: np.ndarray
    norms: np.ndarray
    skipped: list = field(default_factory=list)


def ray_exponent_fit(pencil: PolynomialPencil, angle: float, radii, tol: Tolerances = DEFAULT_TOLERANCES,
                     reference: PolynomialPencil | None = None) -> RayFit:
    """Least-squares slope of ``log |L(r e^{i angle})^{-1}|`` against ``log r``.

    With a coarser ``reference`` discretization, points where the two norms
    differ by more than ``tol.converged`` relative are treated as unresolved
    and skipped.
    """
    radii = np.asarray(radii, dtype=float)
    pts = radii * np.exp(1j * angle)
    norms = np.array([resolvent_norm(pencil, z, tol) for z in pts])
    ok = np.isfinite(norms)
    if reference is not None:
        ref = np.array([resolvent_norm(reference, z, tol) for z in pts])
        with np.errstate(invalid="ignore"):
            ok &= np.abs(ref - norms) <= tol.converged * np.abs(norms)
    skipped = radii[~ok].tolist()
    if ok.sum() < 2:
        raise PencilError("fewer than two usable points on the ray")
    x, y = np.log(radii[ok]), np.log(norms[ok])
    (slope, intercept), res, *_ = np.polyfit(x, y, 1, full=True)
    resid = float(np.sqrt(res[0] / ok.sum())) if len(res) else 0.0
    return RayFit(angle, float(slope), float(intercept), resid, radii[ok], norms[ok], skipped)
