"""Basis-refinement tables for the trace diagnostics and the counting fits."""

import argparse

from pencil_lab.counting import counting_experiment, eta_counting, exponent_fit
from pencil_lab.discretize import HermiteBasis, PolynomialSpec
from pencil_lab.traces import trace_report


def traces(modes_list, m_list):
    print("m  modes  bc_rel      lidskii_rel  scaling_rel  negativity")
    for m in m_list:
        for N in modes_list:
            r = trace_report(m, HermiteBasis.for_degree(1, N, m))
            print(f"{m}  {N:5d}  {r.residuals['bc_identity_relative']:.3e}  "
                  f"{r.residuals['lidskii_relative']:.3e}    {r.residuals['scaling_relative']:.3e}    "
                  f"{r.margins['negativity']:.4f}")


def counting(pairs, m_list):
    print("\nm  modes      converged  window            theta    ci     target")
    for m in m_list:
        for pair in pairs:
            sp, _, fit = counting_experiment(PolynomialSpec.monomial([m]), pair)
            lo, hi = fit.window
            print(f"{m}  {str(pair):10s} {int(sp.converged.sum()):5d}     [{lo:6.3f}, {hi:6.3f}]  "
                  f"{fit.theta_hat:.3f}  {fit.ci:.3f}  {fit.theta_target:.3f}")


def eta_slopes(etas, pairs):
    print("\neta  modes      window            slope vs 1.5")
    for eta in etas:
        for pair in pairs:
            _, sample = eta_counting(PolynomialSpec.monomial([2]), eta, pair)
            fit = exponent_fit(sample)
            print(f"{eta:<4g} {str(pair):10s} [{fit.window[0]:6.3f}, {fit.window[1]:6.3f}]  {fit.theta_hat:.3f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="smaller ladders")
    a = ap.parse_args()
    traces([50, 100] if a.quick else [50, 100, 200], [2, 3, 4])
    pairs = [(100, 125), (160, 200)] if a.quick else [(100, 125), (160, 200), (240, 300)]
    counting(pairs, [2, 3, 4])
    eta_slopes([2.0, 4.0], pairs)
