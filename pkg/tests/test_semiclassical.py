import numpy as np
import pytest
from scipy import integrate

from pencil_lab.discretize import PolynomialSpec
from pencil_lab.semiclassical import (
    BRANCH_CONVENTION,
    COEFFICIENT_HEADER,
    IntegrabilityError,
    SymbolPencil,
    THRESHOLD_CONSTANT,
    c0_closed_form,
    c0_quadrature,
    c0_truncated,
    eta_phase_check,
    f_s_closed,
    f_s_ratio,
    first_nonvanishing_s,
    pairwise_sum,
    pq_condition_scan,
    predicted_phase,
    rescale_parameters,
    sphere_area,
    write_coefficients,
)

X2 = PolynomialSpec.monomial([2])
R2 = PolynomialSpec.radial(2, 2)


import warnings


def radial_f(alpha, n, s):
    """``int_{R^n} (1 + alpha |eta|)^s`` by adaptive radial quadrature (real and imaginary parts)."""
    f = lambda r, part: part((1 + alpha * r) ** s) * r ** (n - 1)
    warnings.simplefilter("ignore", integrate.IntegrationWarning)
    re = integrate.quad(f, 0, np.inf, args=(np.real,), epsabs=0, epsrel=1e-12, limit=400)[0]
    im = integrate.quad(f, 0, np.inf, args=(np.imag,), epsabs=0, epsrel=1e-12, limit=400)[0]
    return sphere_area(n) * complex(re, im)


def test_rescaling_examples():
    r = rescale_parameters(1.0, 2)
    assert r.hbar == 1 and r.to_mu(3.0) == 4.0
    r = rescale_parameters(4.0, 2)
    assert r.hbar == 0.25 and np.isclose(r.to_mu(16.0), 2.0)
    assert np.isclose(r.to_lambda(r.to_mu(1.7 - 2j)), 1.7 - 2j)
    e = rescale_parameters(8.0, 2, "eta")
    assert np.isclose(e.hbar, 8 ** -1.5)
    with pytest.raises(ValueError):
        rescale_parameters(0.0, 2)


def test_f_s_closed_examples():
    assert np.isclose(f_s_closed(1, -3), 1.0)
    assert abs(f_s_ratio(1j, 1, -3).real) < 1e-15
    assert np.isclose(f_s_closed(2, -4), radial_f(1.0, 2, -4).real, rtol=1e-6)
    with pytest.raises(IntegrabilityError):
        f_s_closed(2, -2)


@pytest.mark.parametrize("alpha", [1j, 0.5 + 2j, 3.0, 2 - 0.5j])
@pytest.mark.parametrize("n,s", [(1, -3.0), (2, -4.0), (3, -5.5)])
def test_f_s_homogeneity_law(alpha, n, s):
    assert abs(radial_f(alpha, n, s) - f_s_ratio(alpha, n, s)) < 1e-8 * abs(f_s_ratio(alpha, n, s))


def test_c0_n1_matches_closed_form_and_vanishes():
    sym = SymbolPencil(X2)
    q, c = c0_quadrature(sym, -4.0), c0_closed_form(sym, -4.0)
    assert abs(q.single_branch - c.single_branch) / abs(c.single_branch) < 1e-4
    assert abs(q.value.real) <= 10 * q.error_estimate
    assert np.isclose(c.single_branch, -0.125j)


def test_c0_n2_nonvanishing():
    sym = SymbolPencil(R2)
    q, c = c0_quadrature(sym, -4.0), c0_closed_form(sym, -4.0)
    assert abs(q.value.real - c.value.real) / abs(c.value.real) < 1e-4
    assert abs(q.value.real) > 10 * q.error_estimate


def test_branch_consistency():
    q = c0_quadrature(SymbolPencil(R2), -4.0)
    assert q.value == 2 * q.single_branch.real
    assert q.branch_convention == BRANCH_CONVENTION


def test_integrability_guard_and_divergence():
    sym = SymbolPencil(X2)
    with pytest.raises(IntegrabilityError):
        c0_quadrature(sym, -1.0)
    growth = [abs(c0_truncated(sym, -1.0, R)) for R in (10.0, 40.0, 160.0)]
    assert growth[0] < growth[1] < growth[2] and growth[2] > 2 * growth[0]
    exact = c0_closed_form(sym, -4.0).single_branch
    conv = [abs(c0_truncated(sym, -4.0, R) - exact) for R in (10.0, 40.0)]
    assert max(conv) < 1e-2 * abs(exact)


def test_symbol_requires_elliptic():
    with pytest.raises(ValueError):
        SymbolPencil(PolynomialSpec.monomial([3]))


def test_eta_phase_law():
    chk = eta_phase_check(1, 2, -4.0)
    assert chk.phase_error < 1e-3
    assert np.isclose(chk.predicted_phase, -7 * np.pi / 4)
    assert chk.gamma_s > 0


def test_eta_phase_zero_case():
    # (n + s m) / (2m) = -3/2 is an odd half-integer
    chk = eta_phase_check(1, 2, -3.5)
    assert abs(chk.integral.real) <= 10 * chk.error_estimate


def test_eta_phase_invariant_under_rescaling_p():
    a = eta_phase_check(1, 2, -4.0)
    b = eta_phase_check(1, 2, -4.0, P=PolynomialSpec.monomial([2], 3.0))
    assert abs(a.measured_phase - b.measured_phase) < 1e-8
    assert np.isclose(b.gamma_s, a.gamma_s * 3.0 ** (-1 / 2), rtol=1e-8)


def test_first_nonvanishing_exponent():
    for n in (1, 2):
        s, chk = first_nonvanishing_s(n, 2)
        assert s is not None and s < -n * 1.5
        assert abs(np.cos(predicted_phase(n, 2, s))) > 1e-3


def test_pq_scan_classes():
    assert pq_condition_scan(R2).classification == "all_nonneg"
    mixed = pq_condition_scan(R2, PolynomialSpec(2, (((1, 1), 3.0),)))
    assert mixed.classification == "mixed"
    assert mixed.min_value < 0 < mixed.max_value
    huge_q = pq_condition_scan(PolynomialSpec(2, ()), PolynomialSpec.radial(2, 2) * 100.0)
    assert huge_q.classification in ("mixed", "all_nonpos")
    assert np.isclose(THRESHOLD_CONSTANT, 0.3964466094067262)


def test_pairwise_sum_matches_sum():
    v = np.random.default_rng(0).standard_normal(1001) * 1j
    assert abs(pairwise_sum(v) - v.sum()) < 1e-12


def test_coefficient_csv(tmp_path):
    rows = [c0_closed_form(SymbolPencil(X2), -4.0)]
    text = write_coefficients(tmp_path / "c.csv", rows).read_text().splitlines()
    assert text[0] == ",".join(COEFFICIENT_HEADER)
    assert text[1].endswith("closed-form,both-branches")
