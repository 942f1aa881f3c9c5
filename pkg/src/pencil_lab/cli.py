"""``pencil-lab``: run experiment configs, validate them, and summarize result directories."""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import math
import os
import shutil
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import jsonschema
import numpy as np

from pencil_lab import __version__
from pencil_lab.config import Tolerances
from pencil_lab.counting import (
    counting_experiment,
    divergence_contrast,
    eta_counting,
    exponent_fit,
    localization_sweep,
    window_stability,
)
from pencil_lab.discretize import (
    HermiteBasis,
    PolynomialSpec,
    assemble_general_pencil,
    assemble_quadratic_pencil,
    kinetic_matrix,
    potential_matrix,
)
from pencil_lab.io import atomic_write, json_text, write_csv, write_json
from pencil_lab.pencil import converged_spectrum, pencil_spectrum, ray_exponent_fit
from pencil_lab.semiclassical import SymbolPencil, c0_closed_form, c0_quadrature, eta_phase_check, write_coefficients
from pencil_lab.traces import trace_report

ENV_OUT = "PENCIL_LAB_OUT"
SCHEMA_VERSION = 1
KINDS = ("spectrum", "traces", "symbol", "counting", "localize", "rays", "divergence")

_MONOMIALS = {
    "type": "array",
    "items": {
        "type": "object",
        "properties": {
            "exp": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
            "coef": {"type": "number"},
        },
        "required": ["exp", "coef"],
        "additionalProperties": False,
    },
}


def _tolerance_schema(default) -> dict:
    if isinstance(default, bool):
        return {"type": "boolean"}
    if isinstance(default, int):
        return {"type": "integer", "minimum": 1}
    return {"type": "number", "exclusiveMinimum": 0}


SCHEMA = {
    "type": "object",
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "kind": {"enum": list(KINDS)},
        "pencil": {
            "type": "object",
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "m": {"type": "integer", "minimum": 1},
                "P": _MONOMIALS,
                "Q": _MONOMIALS,
                "eta": {"type": "number", "minimum": 0},
                "form": {"enum": ["standard", "harmonic"]},
            },
            "required": ["m"],
            "additionalProperties": False,
        },
        "basis": {
            "type": "object",
            "properties": {
                "modes": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
                "scale_factor": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "tolerances": {
            "type": "object",
            "properties": {f.name: _tolerance_schema(f.default) for f in fields(Tolerances)},
            "additionalProperties": False,
        },
        "params": {"type": "object"},
        "output_dir": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "jobs": {"type": "integer", "minimum": 1},
    },
    "required": ["schema_version", "kind", "pencil"],
    "additionalProperties": False,
}

# allowed params per kind with defaults
PARAM_DEFAULTS = {
    "spectrum": {"certify": False, "check_levels": 8, "rtol": 1e-8},
    "traces": {"m_list": None, "bc_rtol": 1e-9},
    "symbol": {"s": [-4.0], "variant": "standard", "rtol": 1e-4, "phase_tol": 1e-3},
    "counting": {"points": 24, "theta_tol": 0.2},
    "localize": {"eta_grid": [2.0, 4.0, 8.0, 16.0], "base": 20, "final_max": 0.1,
                 "counting_eta": None, "slope_tol": 0.2},
    "rays": {"angles": [0.0, math.pi], "radii": [10.0, 60.0], "points": 12, "bounds": []},
    "divergence": {"m_list": [1, 2], "stable_rtol": 1e-4},
}

BASIS_DEFAULTS = {
    "spectrum": [64],
    "traces": [60],
    "symbol": [2],
    "counting": [160, 200],
    "localize": [2],
    "rays": [90, 120],
    "divergence": [40, 60, 80],
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    pencil: dict
    modes: tuple
    scale_factor: float
    tolerances: Tolerances
    params: dict
    output_dir: str | None = None
    seed: int = 0
    jobs: int = 1
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(data, SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"schema violation at {where}: {exc.message}") from None
        kind = data["kind"]
        params = dict(PARAM_DEFAULTS[kind])
        unknown = set(data.get("params", {})) - set(params)
        if unknown:
            raise ConfigError(f"unknown params for kind={kind}: {sorted(unknown)}")
        params.update(data.get("params", {}))
        pen = {"n": 1, "P": None, "Q": None, "eta": 0.0, "form": "standard"}
        pen.update(data["pencil"])
        if pen["P"] is None and pen["form"] == "standard" and pen["n"] > 1 and pen["m"] % 2:
            raise ConfigError("default P for n > 1 is |x|^m, which needs even m; give P explicitly")
        basis = data.get("basis", {})
        modes = tuple(sorted(basis.get("modes", BASIS_DEFAULTS[kind])))
        return cls(
            kind=kind,
            pencil=pen,
            modes=modes,
            scale_factor=float(basis.get("scale_factor", 1.0)),
            tolerances=Tolerances.from_dict(data.get("tolerances", {})),
            params=params,
            output_dir=data.get("output_dir"),
            seed=int(data.get("seed", 0)),
            jobs=int(data.get("jobs", 1)),
            raw=copy.deepcopy(data),
        )

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
        return cls.from_dict(data)

    def snapshot(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "pencil": self.pencil,
            "basis": {"modes": list(self.modes), "scale_factor": self.scale_factor},
            "tolerances": self.tolerances.to_dict(),
            "params": self.params,
            "seed": self.seed,
        }

    @property
    def digest(self) -> str:
        canon = json.dumps(self.snapshot(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def polynomial(self, key: str = "P") -> PolynomialSpec | None:
        n, m = self.pencil["n"], self.pencil["m"]
        terms = self.pencil.get(key)
        if terms is not None:
            return PolynomialSpec.from_json(terms, n)
        if key == "Q":
            return None
        return PolynomialSpec.monomial([m]) if n == 1 else PolynomialSpec.radial(n, m)

    def builder(self, eta: float | None = None):
        n, m = self.pencil["n"], self.pencil["m"]
        tol = self.tolerances
        if self.pencil["form"] == "harmonic":
            def build(modes):
                basis = HermiteBasis(n, modes, 1.0, max_dim=tol.max_dim)
                H0 = kinetic_matrix(basis) + potential_matrix(basis, PolynomialSpec.radial(n, 2), tol)
                return assemble_general_pencil([H0, np.zeros_like(H0)], basis=basis)
            return build
        P, Q = self.polynomial("P"), self.polynomial("Q")
        eta = self.pencil["eta"] if eta is None else eta

        def build(modes):
            basis = HermiteBasis.for_degree(n, modes, P.degree, self.scale_factor, max_dim=tol.max_dim)
            return assemble_quadratic_pencil(basis, P, Q, eta, tol)
        return build


@dataclass
class Assertion:
    name: str
    claim: str
    measured: object
    target: str
    passed: bool


@dataclass
class Outcome:
    files: dict = field(default_factory=dict)  # name -> callable(path)
    results: dict = field(default_factory=dict)
    assertions: list = field(default_factory=list)
    plots: list = field(default_factory=list)


# --- handlers ---------------------------------------------------------------

def _run_spectrum(cfg: ExperimentConfig, out: Outcome):
    build = cfg.builder()
    if len(cfg.modes) >= 2:
        sp = converged_spectrum(build, cfg.modes[-2:], cfg.tolerances, certify=cfg.params["certify"])
    else:
        sp = pencil_spectrum(build(cfg.modes[0]), certify=cfg.params["certify"], tol=cfg.tolerances)
    out.files["spectrum.csv"] = sp.to_csv
    out.results["count"] = len(sp)
    if sp.converged is not None:
        out.results["converged"] = int(sp.converged.sum())
    if cfg.pencil["form"] == "harmonic" and cfg.pencil["n"] == 1:
        J = int(cfg.params["check_levels"])
        exact = np.sqrt(2 * np.arange(J) + 1.0)
        got = sp.eigenvalues[: 2 * J]
        err = 0.0
        for j, mod in enumerate(exact):
            for sign in (1, -1):
                z = sign * 1j * mod
                err = max(err, float(np.min(np.abs(got - z)) / mod))
        out.results["max_relative_error"] = err
        out.assertions.append(Assertion("harmonic_levels", f"lowest {2 * J} eigenvalues equal +-i sqrt(2j+1)",
                                        err, f"<= {cfg.params['rtol']}", err <= cfg.params["rtol"]))
    if cfg.params["certify"]:
        ratios = sp.sigma_min_ratio if sp.converged is None else sp.sigma_min_ratio[sp.converged]
        worst = float(np.nanmax(ratios)) if len(ratios) else float("nan")
        out.results["worst_sigma_ratio"] = worst
        thr = cfg.tolerances.sigma_certificate
        out.assertions.append(Assertion("sigma_certificate", "L(lambda) numerically singular at each reported eigenvalue",
                                        worst, f"< {thr}", bool(worst < thr)))


def _run_traces(cfg: ExperimentConfig, out: Outcome):
    m_list = cfg.params["m_list"] or [cfg.pencil["m"]]
    reports = {}
    for m in m_list:
        rows = []
        for N in cfg.modes:
            basis = HermiteBasis.for_degree(1, N, m, cfg.scale_factor, max_dim=cfg.tolerances.max_dim)
            rows.append(trace_report(m, basis, cfg.tolerances))
        reports[m] = rows
        last = rows[-1]
        neg = last.margins["negativity"]
        out.assertions.append(Assertion(f"negativity_m{m}", "Tr(A^-2) below (4/(m+1)-2) Tr(H0^-1) < 0",
                                        neg, "> 0", bool(neg > 0 and last.margins["bound"] < 0)))
        bc = last.residuals["bc_identity_relative"]
        out.assertions.append(Assertion(f"bc_identity_m{m}", "Tr(A^-2) = Tr(B^2) - 2 Tr(C^2)",
                                        bc, f"<= {cfg.params['bc_rtol']}", bool(bc <= cfg.params["bc_rtol"])))
        if len(rows) > 1 and m >= 2:
            sc = [r.residuals["scaling_relative"] for r in rows]
            out.assertions.append(Assertion(f"scaling_decrease_m{m}", "scaling-identity residual shrinks with the basis",
                                            sc, "strictly decreasing", bool(np.all(np.diff(sc) < 0))))
    payload = {str(m): [r.to_dict() for r in rows] for m, rows in reports.items()}
    out.files["traces.json"] = lambda p: write_json(p, payload)
    out.results["negativity_margin"] = {str(m): rows[-1].margins["negativity"] for m, rows in reports.items()}


def _run_symbol(cfg: ExperimentConfig, out: Outcome):
    P, Q = cfg.polynomial("P"), cfg.polynomial("Q")
    variant = cfg.params["variant"]
    results = []
    for s in cfg.params["s"]:
        s = float(s)
        if variant == "eta":
            chk = eta_phase_check(P.n, P.degree, s, P)
            results.append({"s": s, "phase_error": chk.phase_error, "measured": chk.measured_phase,
                            "predicted": chk.predicted_phase, "gamma": chk.gamma_s})
            out.assertions.append(Assertion(f"phase_s{s:g}", "arg of the eta-symbol integral equals (n+sm)pi/(2m) mod pi",
                                            chk.phase_error, f"<= {cfg.params['phase_tol']}",
                                            bool(chk.phase_error <= cfg.params["phase_tol"])))
            continue
        sym = SymbolPencil(P, Q)
        q = c0_quadrature(sym, s)
        entry = {"s": s, "quadrature": q, "error_estimate": q.error_estimate}
        rows = [q]
        if Q is None:
            c = c0_closed_form(sym, s)
            rows.append(c)
            rel = abs(q.value.real - c.value.real) / abs(c.single_branch)
            entry.update(closed=c, relative_error=rel)
            out.assertions.append(Assertion(f"closed_form_s{s:g}", "quadrature equals the factorized closed form",
                                            rel, f"<= {cfg.params['rtol']}", bool(rel <= cfg.params["rtol"])))
            if P.n % 2:
                ok = abs(q.value.real) <= 10 * q.error_estimate
                out.assertions.append(Assertion(f"odd_n_vanishing_s{s:g}", "leading coefficient vanishes for odd n",
                                                abs(q.value.real), f"<= 10 x {q.error_estimate:.3g}", bool(ok)))
        results.append(entry)
        out.results.setdefault("rows", []).extend(rows)
    if variant == "eta":
        out.files["phase.json"] = lambda p: write_json(p, results)
    else:
        rows = out.results.pop("rows")
        out.files["coefficients.csv"] = lambda p: write_coefficients(p, rows)
        out.files["symbol.json"] = lambda p: write_json(p, [
            {k: (v.value if hasattr(v, "value") else v) for k, v in e.items()} for e in results])
    out.results["symbol"] = [{k: (v.value if hasattr(v, "value") else v) for k, v in e.items()} for e in results]


def _run_counting(cfg: ExperimentConfig, out: Outcome):
    P, Q = cfg.polynomial("P"), cfg.polynomial("Q")
    sp, sample, fit = counting_experiment(P, cfg.modes[-2:], cfg.params["points"], Q, cfg.tolerances)
    stab = window_stability(sample)
    out.files["counting.csv"] = sample.to_csv
    out.files["spectrum.csv"] = sp.to_csv
    fit_d = {"theta_hat": fit.theta_hat, "ci": fit.ci, "window": list(fit.window), "theta_target": fit.theta_target,
             "intercept": fit.intercept, "window_shift": stab.max_shift, "window_stable": stab.stable}
    out.files["fit.json"] = lambda p: write_json(p, fit_d)
    out.results.update(fit_d)
    tol = cfg.params["theta_tol"]
    out.assertions.append(Assertion("counting_exponent", "N(r) grows like r^(n(m+1)/m)", fit.theta_hat,
                                    f"{fit.theta_target:.6g} +- {tol}", bool(fit.deviation <= tol)))
    out.assertions.append(Assertion("window_stability", "fit moves less than its CI when the window shrinks 20%",
                                    stab.max_shift, f"< {fit.ci:.3g}", stab.stable))
    out.plots.append("counting")


def _run_localize(cfg: ExperimentConfig, out: Outcome):
    P = cfg.polynomial("P")
    trace = localization_sweep(P, cfg.params["eta_grid"], cfg.params["base"], cfg.jobs, cfg.tolerances)
    out.files["localization.csv"] = trace.to_csv
    d = trace.distances
    out.results.update(distances=d.tolist(), lambda1=trace.lambda1.tolist(), modes=trace.modes)
    out.assertions.append(Assertion("localization_monotone", "|lambda1/eta - i| decreases with eta",
                                    d.tolist(), "strictly decreasing", trace.strictly_decreasing()))
    out.assertions.append(Assertion("localization_final", "lambda1/eta approaches i", float(d[-1]),
                                    f"< {cfg.params['final_max']}", bool(d[-1] < cfg.params["final_max"])))
    eta_c = cfg.params["counting_eta"]
    if eta_c is not None:
        sp, sample = eta_counting(P, float(eta_c), tol=cfg.tolerances)
        fit = exponent_fit(sample)
        out.files["eta_counting.csv"] = sample.to_csv
        out.results["eta_counting"] = {"eta": eta_c, "theta_hat": fit.theta_hat, "ci": fit.ci, "window": list(fit.window)}
        tol = cfg.params["slope_tol"]
        out.assertions.append(Assertion("eta_counting_slope", "N_eta(R) grows like (eta R)^(n(m+1)/m)", fit.theta_hat,
                                        f"{fit.theta_target:.6g} +- {tol}", bool(fit.deviation <= tol)))
    out.plots.append("localization")


def _run_rays(cfg: ExperimentConfig, out: Outcome):
    build = cfg.builder()
    fine = build(cfg.modes[-1])
    ref = build(cfg.modes[-2]) if len(cfg.modes) >= 2 else None
    lo, hi = cfg.params["radii"]
    radii = np.geomspace(lo, hi, int(cfg.params["points"]))
    angles = [float(a) for a in cfg.params["angles"]]
    with ThreadPoolExecutor(max_workers=cfg.jobs) as ex:
        fits = list(ex.map(lambda a: ray_exponent_fit(fine, a, radii, cfg.tolerances, reference=ref), angles))
    rows = [(f.angle, r, v) for f in fits for r, v in zip(f.radii, f.norms)]
    out.files["rays.csv"] = lambda p: write_csv(p, ["angle", "r", "resolvent_norm"], rows)
    summary = [{"angle": f.angle, "slope": f.slope, "intercept": f.intercept, "residual": f.residual,
                "skipped": f.skipped} for f in fits]
    out.files["ray_fits.json"] = lambda p: write_json(p, summary)
    out.results["fits"] = summary
    for b in cfg.params["bounds"]:
        f = next(x for x in fits if abs(x.angle - b["angle"]) < 1e-12)
        lo_b, hi_b = b.get("lo", -math.inf), b.get("hi", math.inf)
        out.assertions.append(Assertion(f"ray_{b['angle']:.4g}", "power-law resolvent growth along the ray",
                                        f.slope, f"[{lo_b}, {hi_b}]", bool(lo_b <= f.slope <= hi_b)))
    out.plots.append("rays")


def _run_divergence(cfg: ExperimentConfig, out: Outcome):
    summ = divergence_contrast(cfg.params["m_list"], cfg.modes, cfg.jobs, cfg.tolerances)
    out.files["divergence.csv"] = summ.to_csv
    out.results["per_m"] = summ.per_m
    for m, info in summ.per_m.items():
        if m == 1:
            out.assertions.append(Assertion("m1_drift", "m=1: min modulus keeps growing with the basis",
                                            info["min_moduli"], "strictly increasing", info["strictly_increasing"]))
        else:
            rel = info["top_relative_change"]
            thr = cfg.params["stable_rtol"]
            out.assertions.append(Assertion(f"m{m}_stable", f"m={m}: min modulus settles", rel, f"< {thr}",
                                            bool(rel < thr)))


HANDLERS = {
    "spectrum": _run_spectrum,
    "traces": _run_traces,
    "symbol": _run_symbol,
    "counting": _run_counting,
    "localize": _run_localize,
    "rays": _run_rays,
    "divergence": _run_divergence,
}


# --- run / report -----------------------------------------------------------

def output_root(cli_out: str | None, cfg: ExperimentConfig | None = None) -> Path:
    if cli_out:
        return Path(cli_out)
    if cfg is not None and cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(os.environ.get(ENV_OUT, "runs"))


def _stamp() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def run(cfg: ExperimentConfig, out_root: Path) -> tuple[Path, dict]:
    """Execute ``cfg`` and publish its run directory atomically."""
    started = _stamp()
    t0 = time.perf_counter()
    np.random.seed(cfg.seed)
    outcome = Outcome()
    try:
        HANDLERS[cfg.kind](cfg, outcome)
    except Exception as exc:
        raise RuntimeError(f"{cfg.kind} run failed: {type(exc).__name__}: {exc}") from exc
    digest = cfg.digest
    record = {
        "artifact_version": __version__,
        "config": cfg.snapshot(),
        "config_hash": digest,
        "kind": cfg.kind,
        "jobs": cfg.jobs,
        "started": started,
        "finished": _stamp(),
        "elapsed_s": time.perf_counter() - t0,
        "results": {"operation": cfg.kind, "config_hash": digest, **outcome.results},
        "assertions": [vars(a) | {"operation": cfg.kind, "config_hash": digest} for a in outcome.assertions],
        "passed": all(a.passed for a in outcome.assertions),
        "files": sorted(outcome.files) + ["record.json"],
        "plots": outcome.plots,
    }
    out_root.mkdir(parents=True, exist_ok=True)
    final = out_root / f"{cfg.kind}-{digest[:12]}"
    tmp = Path(tempfile.mkdtemp(prefix=f".{final.name}.", dir=out_root))
    try:
        for name, writer in outcome.files.items():
            writer(tmp / name)
        atomic_write(tmp / "record.json", json_text(record))
        if final.exists():
            trash = Path(tempfile.mkdtemp(prefix=f".old-{final.name}.", dir=out_root))
            os.replace(final, trash / "old")
            shutil.rmtree(trash)
        os.replace(tmp, final)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return final, record


_PLOT_TEMPLATES = {
    "counting": '''import csv, json
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("counting.csv")))
fit = json.load(open("fit.json"))
r = [float(x["r"]) for x in rows]
N = [float(x["count"]) for x in rows]
plt.loglog(r, N, "o", label="N(r)")
c = [N[0] * (x / r[0]) ** fit["theta_hat"] for x in r]
plt.loglog(r, c, "-", label="slope %.3f +- %.3f" % (fit["theta_hat"], fit["ci"]))
plt.xlabel("r"); plt.ylabel("N(r)"); plt.legend()
plt.savefig("counting.png", dpi=150)
''',
    "localization": '''import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("localization.csv")))
z = [(float(x["re"]) / float(x["eta"]), float(x["im"]) / float(x["eta"])) for x in rows]
plt.plot([a for a, _ in z], [b for _, b in z], "o-", label="lambda_1 / eta")
for (a, b), x in zip(z, rows):
    plt.annotate("eta=" + x["eta"][:5], (a, b))
plt.plot([0], [1], "k*", label="i")
plt.gca().set_aspect("equal"); plt.legend()
plt.savefig("localization.png", dpi=150)
''',
    "rays": '''import csv, json
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("rays.csv")))
fits = json.load(open("ray_fits.json"))
for f in fits:
    pts = [(float(x["r"]), float(x["resolvent_norm"])) for x in rows if float(x["angle"]) == f["angle"]]
    plt.loglog([p[0] for p in pts], [p[1] for p in pts], "o-", label="angle %.3f slope %.3f" % (f["angle"], f["slope"]))
plt.xlabel("r"); plt.ylabel("|L(r e^{ia})^-1|"); plt.legend()
plt.savefig("rays.png", dpi=150)
''',
}


def _fmt_measured(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt_measured(x) for x in v) + "]"
    return str(v)


def _cell(v) -> str:
    return str(v).replace("|", "\\|")


def report(path) -> Path:
    """Write ``summary.md`` and plot scripts for every run record under ``path``."""
    path = Path(path)
    if not path.is_dir():
        raise FileNotFoundError(f"{path} is not a directory")
    recs = sorted(path.glob("record.json")) + sorted(path.glob("*/record.json"))
    if not recs:
        raise FileNotFoundError(f"no run records under {path}")
    lines = ["# Run summary", "", "| experiment | claim | measured | target | result |", "|---|---|---|---|---|"]
    for rp in recs:
        rec = json.loads(rp.read_text(encoding="utf-8"))
        label = f"{rec['kind']} ({rp.parent.name})"
        if not rec["assertions"]:
            lines.append(f"| {label} | (no assertions) | | | |")
        for a in rec["assertions"]:
            res = "PASS" if a["passed"] else "FAIL"
            cells = [label, a["claim"], _fmt_measured(a["measured"]), a["target"], res]
            lines.append("| " + " | ".join(_cell(c) for c in cells) + " |")
        for name in rec.get("plots", []):
            atomic_write(rp.parent / f"plot_{name}.py", _PLOT_TEMPLATES[name])
    return atomic_write(path / "summary.md", "\n".join(lines) + "\n")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pencil-lab", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="execute an experiment config")
    r.add_argument("config")
    r.add_argument("--out", help=f"output root (default: config output_dir, then ${ENV_OUT}, then ./runs)")
    r.add_argument("--jobs", type=int, help="worker threads for independent sweep points")
    rep = sub.add_parser("report", help="summarize run directories")
    rep.add_argument("dir")
    v = sub.add_parser("validate", help="check a config against the schema")
    v.add_argument("config")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.cmd == "validate":
            cfg = ExperimentConfig.load(args.config)
            print(f"ok: kind={cfg.kind} hash={cfg.digest[:12]}")
            return 0
        if args.cmd == "report":
            print(report(args.dir))
            return 0
        cfg = ExperimentConfig.load(args.config)
        if args.jobs is not None:
            if args.jobs < 1:
                raise ConfigError("--jobs must be positive")
            cfg = ExperimentConfig.from_dict({**cfg.raw, "jobs": args.jobs})
        final, rec = run(cfg, output_root(args.out, cfg))
        for a in rec["assertions"]:
            print(f"{'PASS' if a['passed'] else 'FAIL'} {a['name']}: {_fmt_measured(a['measured'])} (target {a['target']})")
        print(final)
        return 0 if rec["passed"] else 1
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
