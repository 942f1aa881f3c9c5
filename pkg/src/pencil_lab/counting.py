"""Eigenvalue counting, localization of the smallest eigenvalue, and the m = 1 contrast.

Only eigenvalues that pass the two-rung convergence filter feed counts and
fits: companion matrices of truncated pencils carry spurious large
eigenvalues, and for these non-normal problems eigenvalue condition numbers
grow exponentially with the modulus, so the converged set is bounded even
when the basis is enlarged.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from pencil_lab.config import DEFAULT_TOLERANCES, Tolerances
from pencil_lab.discretize import HermiteBasis, PolynomialSpec, assemble_quadratic_pencil
from pencil_lab.io import write_csv
from pencil_lab.pencil import Spectrum, converged_spectrum, pencil_spectrum


class CountingError(ValueError):
    pass


class LocalizationError(RuntimeError):
    def __init__(self, msg, eta):
        super().__init__(msg)
        self.eta = eta


def counting_exponent(n: int, m: int) -> float:
    return n * (m + 1) / m


def pencil_builder(P: PolynomialSpec, Q: PolynomialSpec | None = None, eta: float = 0.0,
                   scale_factor: float = 1.0, tol: Tolerances = DEFAULT_TOLERANCES):
    """``modes -> pencil`` for ``-Laplacian + (P - lam)^2 + Q^2 + eta^2`` on the default-scale basis."""
    m = P.degree

    def build(modes: int):
        basis = HermiteBasis.for_degree(P.n, modes, m, scale_factor, max_dim=tol.max_dim)
        return assemble_quadratic_pencil(basis, P, Q, eta, tol)

    return build


def _moduli(spectrum) -> np.ndarray:
    if isinstance(spectrum, Spectrum):
        vals = spectrum.converged_values() if spectrum.converged is not None else spectrum.eigenvalues
    else:
        vals = np.asarray(spectrum)
    return np.sort(np.abs(vals))


def trust_window(moduli) -> tuple[float, float]:
    """``(third smallest modulus, half the largest)`` of a converged set."""
    mods = np.sort(np.asarray(moduli))
    if len(mods) < 3:
        raise CountingError("need at least three converged eigenvalues for a trust window")
    return float(mods[2]), float(mods[-1] / 2)


@dataclass
class CountingSample:
    r: np.ndarray
    counts: np.ndarray
    converged_only: bool
    theta_target: float
    window: tuple | None = None
    scale: float = 1.0

    def rows(self):
        return ((r, c, self.theta_target) for r, c in zip(self.r, self.counts))

    def to_csv(self, path):
        return write_csv(path, ["r", "count", "theta_target"], self.rows())


def counting_function(spectrum, r_grid, theta_target: float = float("nan"), scale: float = 1.0) -> CountingSample:
    """``N(r) = #{j : |lam_j| / scale <= r}`` with multiplicity.

    ``spectrum`` is a :class:`Spectrum` (converged subset used when flagged)
    or an array of eigenvalues already filtered by the caller.
    """
    mods = _moduli(spectrum) / scale
    if len(mods) == 0:
        raise CountingError("empty converged set")
    r = np.asarray(r_grid, dtype=float)
    counts = np.searchsorted(mods, r, side="right")
    window = trust_window(mods) if len(mods) >= 3 else None
    conv = not isinstance(spectrum, Spectrum) or spectrum.converged is not None
    return CountingSample(r, counts, conv, theta_target, window, scale)


@dataclass
class ExponentFit:
    theta_hat: float
    ci: float
    window: tuple
    n_points: int
    intercept: float
    theta_target: float

    @property
    def deviation(self) -> float:
        return abs(self.theta_hat - self.theta_target)


def exponent_fit(sample: CountingSample, window: tuple | None = None, min_points: int = 8,
                 min_count: int = 5) -> ExponentFit:
    """Slope of ``log N`` against ``log(scale * r)`` over the trust window.

    ``ci`` is the 95% half-width from the regression standard error.
    """
    lo, hi = window or sample.window or (sample.r.min(), sample.r.max())
    sel = (sample.r >= lo) & (sample.r <= hi) & (sample.counts >= min_count)
    if sel.sum() < min_points:
        raise CountingError(f"only {int(sel.sum())} usable grid points (need {min_points})")
    x = np.log(sample.scale * sample.r[sel])
    y = np.log(sample.counts[sel])
    fit = stats.linregress(x, y)
    half = float(stats.t.ppf(0.975, sel.sum() - 2) * fit.stderr)
    return ExponentFit(float(fit.slope), half, (float(lo), float(hi)), int(sel.sum()),
                       float(fit.intercept), sample.theta_target)


@dataclass
class WindowStability:
    base: ExponentFit
    shrunk: list
    max_shift: float
    stable: bool


def window_stability(sample: CountingSample, shrink: float = 0.2, **kw) -> WindowStability:
    """Refit after moving each window end inward by ``shrink`` of the log-width."""
    base = exponent_fit(sample, **kw)
    lo, hi = base.window
    width = math.log(hi / lo)
    windows = [(lo * math.exp(shrink * width), hi), (lo, hi * math.exp(-shrink * width))]
    fits = [exponent_fit(sample, window=w, min_points=3, min_count=kw.get("min_count", 5)) for w in windows]
    shift = max(abs(f.theta_hat - base.theta_hat) for f in fits)
    return WindowStability(base, fits, shift, shift < base.ci)


def counting_experiment(P: PolynomialSpec, modes_pair=(160, 200), points: int = 24,
                        Q: PolynomialSpec | None = None, tol: Tolerances = DEFAULT_TOLERANCES):
    """Converged spectrum, counting sample on a log grid over the trust window, and its fit."""
    sp = converged_spectrum(pencil_builder(P, Q, tol=tol), modes_pair, tol)
    mods = _moduli(sp)
    lo, hi = trust_window(mods)
    sample = counting_function(sp, np.geomspace(lo, hi, points), counting_exponent(P.n, P.degree))
    return sp, sample, exponent_fit(sample)


@dataclass
class LocalizationTrace:
    eta: np.ndarray
    lambda1: np.ndarray
    modes: list = field(default_factory=list)

    @property
    def lambda1_over_eta(self) -> np.ndarray:
        return self.lambda1 / self.eta

    @property
    def distances(self) -> np.ndarray:
        return np.abs(self.lambda1_over_eta - 1j)

    @property
    def conjugate_distances(self) -> np.ndarray:
        return np.abs(np.conj(self.lambda1_over_eta) + 1j)

    def strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.distances) < 0))

    def rows(self):
        for e, l, d in zip(self.eta, self.lambda1, self.distances):
            yield (e, l.real, l.imag, d)

    def to_csv(self, path):
        return write_csv(path, ["eta", "re", "im", "distance"], self.rows())


def modes_for_eta(eta: float, base: int = 20) -> int:
    return int(math.ceil(base * math.sqrt(eta)))


def smallest_converged(P: PolynomialSpec, eta: float, base: int = 20, refine: float = 1.25,
                       tol: Tolerances = DEFAULT_TOLERANCES) -> tuple[complex, int]:
    if not eta > 0:
        raise LocalizationError("eta must be positive", eta)
    lo = modes_for_eta(eta, base)
    hi = int(math.ceil(refine * lo))
    sp = converged_spectrum(pencil_builder(P, eta=eta, tol=tol), (lo, hi), tol)
    conv = sp.converged_values()
    if len(conv) == 0:
        raise LocalizationError(f"no converged eigenvalue at eta={eta}", eta)
    lam = conv[0]
    if not sp.converged[0] and abs(sp.eigenvalues[0]) < abs(lam) * (1 - tol.converged):
        raise LocalizationError(f"minimal-modulus eigenvalue not converged at eta={eta}", eta)
    return (lam if lam.imag >= 0 else np.conj(lam)), hi


def localization_sweep(P: PolynomialSpec, eta_grid, base: int = 20, jobs: int = 1,
                       tol: Tolerances = DEFAULT_TOLERANCES) -> LocalizationTrace:
    """Minimal-modulus eigenvalue of ``-Laplacian + (P - lam)^2 + eta^2`` along ``eta_grid``.

    The upper-half-plane member of each conjugate pair is reported.
    """
    eta = np.asarray(eta_grid, dtype=float)
    if np.any(eta <= 0):
        raise LocalizationError("eta grid must be positive", float(eta.min()))
    if np.any(np.diff(eta) <= 0):
        raise ValueError("eta grid must be ascending")
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as ex:
        out = list(ex.map(lambda e: smallest_converged(P, float(e), base, tol=tol), eta))
    return LocalizationTrace(eta, np.array([o[0] for o in out]), [o[1] for o in out])


def eta_counting(P: PolynomialSpec, eta: float, modes_pair=None, R_grid=None, points: int = 24,
                 base: int = 80, tol: Tolerances = DEFAULT_TOLERANCES):
    """Count ``#{j : |lam_j(eta)| / eta <= R}`` for the eta pencil.

    The radius is measured on the rescaled parameter ``mu = lam / eta``, so the
    fit abscissa is ``log(eta R)``.
    """
    if modes_pair is None:
        lo = modes_for_eta(eta, base)
        modes_pair = (lo, int(math.ceil(1.25 * lo)))
    sp = converged_spectrum(pencil_builder(P, eta=eta, tol=tol), modes_pair, tol)
    theta = counting_exponent(P.n, P.degree)
    mods = _moduli(sp) / eta
    if R_grid is None:
        lo, hi = trust_window(mods)
        R_grid = np.geomspace(lo, hi, points)
    sample = counting_function(sp, R_grid, theta, scale=eta)
    return sp, sample


@dataclass
class ScalingCollapse:
    etas: tuple
    R: np.ndarray
    log_shift: np.ndarray
    slope: float
    theta_target: float


def scaling_collapse(P: PolynomialSpec, etas, R_grid, modes_pair=(160, 200),
                     tol: Tolerances = DEFAULT_TOLERANCES) -> ScalingCollapse:
    """Shift of ``log N_eta(R)`` between two eta values at fixed ``R``.

    Under ``N ~ (eta R)^theta`` the shift is ``theta log(eta2 / eta1)``; ``slope``
    is the mean shift divided by ``log(eta2 / eta1)``. Grid points where either
    count is zero or exceeds the smaller converged set are dropped.
    """
    e1, e2 = sorted(etas)
    R = np.asarray(R_grid, dtype=float)
    counts, caps = [], []
    for e in (e1, e2):
        sp, sample = eta_counting(P, e, modes_pair, R, tol=tol)
        counts.append(sample.counts)
        caps.append(trust_window(_moduli(sp) / e)[1])
    keep = (counts[0] > 0) & (R <= min(caps))
    if not keep.any():
        raise CountingError("no common resolved R points for the two eta values")
    shift = np.log(counts[1][keep] / counts[0][keep])
    return ScalingCollapse((e1, e2), R[keep], shift, float(np.mean(shift) / math.log(e2 / e1)),
                           counting_exponent(P.n, P.degree))


@dataclass
class DivergenceRow:
    m: int
    modes: int
    min_modulus: float


@dataclass
class DivergenceSummary:
    rows: list
    per_m: dict

    def to_csv(self, path):
        return write_csv(path, ["m", "modes", "min_modulus"],
                         ((r.m, r.modes, r.min_modulus) for r in self.rows))


def divergence_contrast(m_list, ladder, jobs: int = 1, tol: Tolerances = DEFAULT_TOLERANCES) -> DivergenceSummary:
    """Drift of ``min |lam_j|`` over a basis ladder for ``D^2 + (x^m - lam)^2``.

    No eigenvalue of the ``m = 1`` pencil survives refinement, so the raw
    minimum over all computed eigenvalues is tracked for every ``m``.
    """
    ladder = sorted(ladder)
    jobs_list = [(m, N) for m in m_list for N in ladder]

    def one(job):
        m, N = job
        build = pencil_builder(PolynomialSpec.monomial([m]), tol=tol)
        lam = pencil_spectrum(build(N), certify=False, tol=tol).eigenvalues
        return DivergenceRow(m, N, float(np.min(np.abs(lam))))

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as ex:
        rows = list(ex.map(one, jobs_list))
    per_m = {}
    for m in m_list:
        mins = np.array([r.min_modulus for r in rows if r.m == m])
        per_m[m] = {
            "min_moduli": mins.tolist(),
            "strictly_increasing": bool(np.all(np.diff(mins) > 0)),
            "top_relative_change": float(abs(mins[-1] - mins[-2]) / mins[-1]) if len(mins) > 1 else float("nan"),
        }
    return DivergenceSummary(rows, per_m)
