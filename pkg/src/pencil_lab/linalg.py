"""Dense linear-algebra substrate.

Matrices are plain ``numpy`` arrays.  Everything here is a pure function of
its inputs; tolerances default to :data:`pencil_lab.config.DEFAULT_TOLERANCES`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from pencil_lab.config import DEFAULT_TOLERANCES, Tolerances


class LinalgError(ValueError):
    """Invalid input for a linear-algebra operation."""


class EigensolverError(RuntimeError):
    """LAPACK failed to converge on an eigenproblem."""


class SingularMatrixError(LinalgError):
    pass


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    vectors: np.ndarray | None
    residual_bound: float

    def __len__(self) -> int:
        return len(self.eigenvalues)


def _square(M) -> np.ndarray:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise LinalgError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise LinalgError("matrix has non-finite entries")
    return M


def principal_arg(z) -> np.ndarray:
    """Argument in (-pi, pi]."""
    a = np.angle(z)
    return np.where(a <= -np.pi, np.pi, a)


def spectral_order(values, decimals: int = 9) -> np.ndarray:
    """Indices sorting ``values`` by modulus, then argument in (-pi, pi].

    Moduli are rounded to ``decimals`` significant digits first so that the
    members of a conjugate pair (equal modulus up to roundoff) are ordered by
    argument rather than by noise.
    """
    values = np.asarray(values)
    mod = np.abs(values)
    scale = np.where(mod > 0, 10.0 ** np.floor(np.log10(np.where(mod > 0, mod, 1.0))), 1.0)
    key_mod = np.round(mod / scale, decimals) * scale
    return np.lexsort((principal_arg(values), key_mod))


def cluster_eigenvalues(values, tol: float | None = None) -> list[np.ndarray]:
    """Group eigenvalues closer than ``tol * (1 + |lambda|)`` (single linkage).

    Returns index arrays, one per cluster, in order of first appearance.
    """
    tol = DEFAULT_TOLERANCES.cluster if tol is None else tol
    values = np.asarray(values, dtype=complex)
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    order = np.argsort(values.real, kind="stable")
    # sweep in real part; only neighbours within the window can merge
    for a in range(n):
        i = order[a]
        for b in range(a + 1, n):
            j = order[b]
            thr = tol * (1.0 + max(abs(values[i]), abs(values[j])))
            if values[j].real - values[i].real > thr:
                break
            if abs(values[i] - values[j]) <= thr:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [np.array(g) for g in sorted(groups.values(), key=lambda g: g[0])]


def multiplicities(values, tol: float | None = None) -> np.ndarray:
    """Cluster size of each eigenvalue."""
    out = np.zeros(len(values), dtype=int)
    for g in cluster_eigenvalues(values, tol):
        out[g] = len(g)
    return out


def eig_general(M, want_vectors: bool = True) -> EigenDecomposition:
    """Full complex spectrum of a dense square matrix (LAPACK ``geev``, balanced)."""
    M = _square(M)
    try:
        if want_vectors:
            w, V = np.linalg.eig(M)
        else:
            w, V = np.linalg.eigvals(M), None
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(str(exc)) from exc
    idx = spectral_order(w)
    w = w[idx]
    res = 0.0
    if V is not None:
        V = V[:, idx]
        nrm = np.linalg.norm(M, 2) if M.shape[0] <= 400 else np.linalg.norm(M, "fro")
        if nrm > 0:
            R = M @ V - V * w
            res = float(np.max(np.linalg.norm(R, axis=0) / (nrm * np.linalg.norm(V, axis=0))))
    return EigenDecomposition(w, V, res)


def check_hermitian(M, tol: float | None = None) -> np.ndarray:
    M = _square(M)
    tol = DEFAULT_TOLERANCES.symmetry if tol is None else tol
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.conj().T)) > tol * scale:
        raise LinalgError("matrix is not self-adjoint within tolerance")
    return M


def eig_selfadjoint(M, tol: float | None = None, want_vectors: bool = True) -> EigenDecomposition:
    """Real ascending spectrum and orthonormal eigenvectors of a self-adjoint matrix."""
    M = check_hermitian(M, tol)
    if want_vectors:
        w, V = np.linalg.eigh(M)
        nrm = max(float(np.max(np.abs(w))), np.finfo(float).tiny)
        res = float(np.max(np.linalg.norm(M @ V - V * w, axis=0)) / nrm)
        return EigenDecomposition(w, V, res)
    return EigenDecomposition(np.linalg.eigvalsh(M), None, 0.0)


def sqrt_psd(M, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Positive square root of a positive semidefinite self-adjoint matrix.

    Eigenvalues in ``[-tol.psd_clip * ||M||, 0)`` are clipped to zero.
    """
    M = check_hermitian(M, tol.symmetry)
    w, V = np.linalg.eigh(M)
    bound = tol.psd_clip * max(float(np.max(np.abs(w))), 1.0)
    if w[0] < -bound:
        raise LinalgError(f"matrix is not positive semidefinite (eigenvalue {w[0]:.3e})")
    r = np.sqrt(np.clip(w, 0.0, None))
    R = (V * r) @ V.conj().T
    return 0.5 * (R + R.conj().T)


def inv_sqrt_pd(M, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """``M^{-1/2}`` for a positive definite self-adjoint matrix."""
    M = check_hermitian(M, tol.symmetry)
    w, V = np.linalg.eigh(M)
    if w[0] <= 0:
        raise LinalgError(f"matrix is not positive definite (eigenvalue {w[0]:.3e})")
    R = (V / np.sqrt(w)) @ V.conj().T
    return 0.5 * (R + R.conj().T)


def singular_values(M) -> np.ndarray:
    M = np.asarray(M)
    if not np.all(np.isfinite(M)):
        raise LinalgError("matrix has non-finite entries")
    return np.linalg.svd(M, compute_uv=False)


def schatten_norm(M, p: float) -> float:
    if p <= 0:
        raise LinalgError("Schatten exponent must be positive")
    s = singular_values(M)
    smax = s[0] if len(s) else 0.0
    if smax == 0:
        return 0.0
    # factor out the largest singular value to avoid overflow for large p
    return float(smax * np.sum((s / smax) ** p) ** (1.0 / p))


def inverse(M) -> np.ndarray:
    """Inverse via LU with a 1-norm condition guard."""
    M = _square(M)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(M, check_finite=False)
    if np.any(np.diag(lu) == 0):
        raise SingularMatrixError("matrix is exactly singular")
    X = sla.lu_solve((lu, piv), np.eye(M.shape[0], dtype=lu.dtype), check_finite=False)
    cond = np.linalg.norm(M, 1) * np.linalg.norm(X, 1)
    if not np.isfinite(cond) or cond > 1.0 / (64 * np.finfo(float).eps):
        raise SingularMatrixError(f"matrix is numerically singular (cond_1 ~ {cond:.2e})")
    return X


def inverse_power_trace(M, power: int) -> complex:
    """``Tr(M^{-power})`` from an LU factorization, without any eigenvalues."""
    if power < 1:
        raise LinalgError("power must be a positive integer")
    X = inverse(M)
    if power == 1:
        return complex(np.trace(X))
    half = power // 2
    Y = np.linalg.matrix_power(X, half)
    if power % 2 == 0:
        # Tr(Y Y) without forming the product
        return complex(np.sum(Y * Y.T))
    Z = Y @ X
    return complex(np.sum(Z * Y.T))
