"""Command-line driver: ``fracsing <command> --config <path> [--out <dir>]``.

Commands
--------
basis-check         orthonormality, eigen-identities and the (g1)/(g2) checks
solve-eps           one regularized solve at ``solver.eps``
continue            the eps schedule, ordering certificates and the limit
validate-extension  c_s calibration and the cylinder energy identities
uniqueness-probe    limits from two schedules and from warm/fresh starts
report              all of the above in one run directory

Each run writes into a new (or empty) directory: CSV data, ``report.json``,
``failure.json`` when a certificate fails, and ``manifest.json`` with the
SHA-256 of every file.  Exit status is 0 iff every certificate passed,
1 on a failed certificate and 2 on a configuration or usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, config_to_dict, load_config
from .continuation import (ContinuationReport, estimate_limit, limit_residual, run_continuation,
                           uniqueness_probe)
from .extension import (bessel_profile, calibrate_cs, closed_form_constant, cylinder_energy,
                        extend_field, ygrid_for_basis)
from .geometry import EigenBasis, default_basis, orthonormality_error, synthesize
from .io import RunArtifacts
from .monotone import Certificate, SequenceTrace, SolveReport, energy_pairing, solve_regularized
from .nonlinearity import SingularRHS, verify_g1_g2
from .spectral import apply_fractional, hs_norm

log = logging.getLogger("fracsing")

COMMANDS = ("basis-check", "solve-eps", "continue", "validate-extension", "uniqueness-probe", "report")

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


@dataclass
class Outcome:
    """What one pipeline contributes to ``report.json``."""

    certificates: list[dict] = field(default_factory=list)
    traces: dict = field(default_factory=dict)
    limit: dict | None = None
    calibration: dict | None = None

    def add(self, certs, scope: str) -> None:
        for c in certs:
            self.certificates.append({"scope": scope, **c.as_dict()})

    def merge(self, other: "Outcome") -> None:
        self.certificates.extend(other.certificates)
        self.traces.update(other.traces)
        self.limit = other.limit if other.limit is not None else self.limit
        self.calibration = other.calibration if other.calibration is not None else self.calibration

    @property
    def first_failed(self) -> dict | None:
        return next((c for c in self.certificates if not c["passed"]), None)


def _basis(cfg: RunConfig) -> EigenBasis:
    return default_basis(cfg.domain, cfg.n_modes, cfg.grid_nodes)


def _sequence_dict(tr: SequenceTrace) -> dict:
    return {"iterations": tr.iterations, "converged": tr.converged, "monotone_margin": tr.monotone_margin,
            "lower_margin": tr.lower_margin, "upper_margin": tr.upper_margin,
            "energy_defect": tr.energy_defect, "refactorizations": tr.refactorizations,
            "last_change": tr.changes[-1] if tr.changes else 0.0}


def _solve_dict(sol: SolveReport) -> dict:
    return {"eps": sol.eps, "sup_norm": float(np.abs(sol.solution).max()), "min_interior": sol.min_interior,
            "hs_energy": sol.hs_energy, "pairing": sol.pairing, "energy_defect": sol.energy_defect,
            "bound_side": sol.bound_side, "gap": sol.bracket.gap, "shift_max": sol.bracket.shift_max,
            "residual_max": sol.bracket.residual_max,
            "ascending": _sequence_dict(sol.bracket.ascending),
            "descending": _sequence_dict(sol.bracket.descending)}


# pipelines ---------------------------------------------------------------


def basis_check(cfg: RunConfig, art: RunArtifacts) -> Outcome:
    out = Outcome()
    b = _basis(cfg)
    err = orthonormality_error(b)
    tol = 1e-12
    certs = [Certificate("orthonormality", err <= tol, tol - err, tol, f"grid {b.grid.shape}")]
    k = min(16, b.n_modes)
    worst = 0.0
    for i in range(k):
        e = np.zeros(b.n_modes)
        e[i] = 1.0
        lam_s = b.eigenvalues[i] ** cfg.s
        worst = max(worst, abs(apply_fractional(b, e, cfg.s)[i] - lam_s) / lam_s)
    certs.append(Certificate("eigen-identity", worst <= tol, tol - worst, tol, f"first {k} modes, s={cfg.s}"))
    g12 = verify_g1_g2(SingularRHS(cfg.p))
    certs.append(Certificate("g1-blowup", g12.g1, g12.g_small - g12.g_one - g12.margin, g12.margin))
    certs.append(Certificate("g2-nonincreasing", g12.g2, -float(len(g12.violations)), 0.0))
    out.add(certs, "basis")
    cols = {f"k{d + 1}" if b.domain.dim > 1 else "k": b.indices[:, d] for d in range(b.domain.dim)}
    cols.update({"lambda": b.eigenvalues, "lambda_s": b.powers(cfg.s)})
    art.write_columns("basis.csv", cols)
    out.traces["basis"] = {"n_modes": b.n_modes, "grid": list(b.grid.shape),
                           "orthonormality_error": err, "eigen_identity_error": worst}
    return out


def solve_eps(cfg: RunConfig, art: RunArtifacts) -> Outcome:
    out = Outcome()
    b = _basis(cfg)
    sol = solve_regularized(b, cfg.exponents, cfg.eps, opts=cfg.options)
    out.add(sol.certificates, f"solve eps={cfg.eps:.6g}")
    art.write_solution("solve_solution.csv", b.grid, sol.solution)
    art.write_solution("solve_supersolution.csv", b.grid, sol.supersolution)
    asc, desc = sol.bracket.ascending.changes, sol.bracket.descending.changes
    art.write_columns("solve_trace.csv", {
        "direction": np.array([0] * len(asc) + [1] * len(desc)),
        "iteration": np.concatenate([np.arange(1, len(asc) + 1), np.arange(1, len(desc) + 1)]).astype(int),
        "change": np.array(asc + desc, dtype=float),
    })
    out.traces["solve"] = _solve_dict(sol)
    return out


def _continuation_outcome(cfg: RunConfig, rep: ContinuationReport, art: RunArtifacts) -> Outcome:
    out = Outcome()
    for k, st in enumerate(rep.steps):
        scope = f"step {k} eps={st.eps:.6g}"
        out.add(st.solve.certificates + st.certificates, scope)
        art.write_solution(f"continuation_step{k:02d}.csv", rep.basis.grid, st.solve.solution)
    out.add([Certificate("continuation-complete", not rep.truncated, 0.0, 0.0, "; ".join(rep.flags))],
            "continuation")
    out.add(rep.summary, "continuation")
    n = len(rep.steps)
    inc = np.concatenate([[np.nan], rep.increments]) if n else np.array([])
    env = np.concatenate([[np.nan], rep.envelopes]) if n else np.array([])
    art.write_columns("continuation_trace.csv", {
        "step": np.arange(n), "eps": rep.eps, "sup_norm": rep.sup_norms, "increment": inc, "envelope": env,
        "hs_energy": np.array([st.solve.hs_energy for st in rep.steps]),
        "pairing": rep.pairings, "bound_side": rep.bound_sides,
        "iterations_ascending": np.array([st.solve.bracket.ascending.iterations for st in rep.steps], dtype=int),
        "iterations_descending": np.array([st.solve.bracket.descending.iterations for st in rep.steps], dtype=int),
    })
    out.traces["continuation"] = {"schedule": rep.eps, "steps": [_solve_dict(st.solve) for st in rep.steps],
                                  "increments": rep.increments, "envelopes": rep.envelopes,
                                  "truncated": rep.truncated, "flags": rep.flags}
    if n >= 3:
        lim = estimate_limit(rep, cfg.tol_pos)
        out.add(lim.certificates, "limit")
        res = limit_residual(rep.basis, lim.field, cfg.s, cfg.p, cfg.limit_modes, cfg.limit_refine)
        rmax = float(np.abs(res).max())
        out.add([Certificate("limit-weak-residual", rmax <= cfg.limit_tol, cfg.limit_tol - rmax, cfg.limit_tol,
                             f"first {cfg.limit_modes} modes on a {cfg.limit_refine}x refined grid")], "limit")
        art.write_solution("continuation_limit.csv", rep.basis.grid, lim.field)
        out.limit = {"eps_final": lim.tail_bound, "tail_bound": lim.tail_bound,
                     "sup_norm": float(np.abs(lim.field).max()), "min_interior": lim.min_interior,
                     "increments_monotone": lim.increments_monotone,
                     "weak_residual": res, "weak_residual_max": rmax}
    return out


def continue_run(cfg: RunConfig, art: RunArtifacts) -> Outcome:
    rep = run_continuation(_basis(cfg), cfg.exponents, cfg.schedule, cfg.options)
    return _continuation_outcome(cfg, rep, art)


def validate_extension(cfg: RunConfig, art: RunArtifacts) -> Outcome:
    out = Outcome()
    b = _basis(cfg)
    s = cfg.s
    if not 0 < s < 1:
        out.add([Certificate("extension-order", False, 0.0, 0.0, "the extension needs s < 1")], "extension")
        return out
    yg = ygrid_for_basis(b, cfg.ygrid_m, cfg.ygrid_gamma, cfg.ygrid_height)
    modes = cfg.calibration_modes
    cal = calibrate_cs(b, s, modes, yg)
    closed = closed_form_constant(s)
    rel = abs(cal.constant / closed - 1.0)
    certs = [
        Certificate("calibration-spread", cal.passed, cal.tolerance - cal.spread, cal.tolerance),
        Certificate("calibration-vs-bessel-constant", rel <= 0.01, 0.01 - rel, 0.01,
                    f"closed form {closed:.12g}"),
    ]
    y = yg.nodes
    window = y <= 0.5 * yg.y_max
    prof_cols = {"y": y}
    worst_bessel = 0.0
    for i in range(modes):
        U = extend_field(b, np.eye(b.n_modes)[i], s, yg)
        lam = b.eigenvalues[i]
        th = U.profiles[i]
        ref = bessel_profile(lam, s, y)
        worst_bessel = max(worst_bessel, float(np.abs(th - ref)[window].max()))
        prof_cols[f"theta{i + 1}"] = th
        prof_cols[f"bessel{i + 1}"] = ref
    certs.append(Certificate("profile-vs-bessel", worst_bessel <= 1e-4, 1e-4 - worst_bessel, 1e-4,
                             "on [0, Y/2]"))
    if s == 0.5:
        dev = abs(cal.constant - 1.0)
        certs.append(Certificate("half-order-constant", dev <= 0.01, 0.01 - dev, 0.01))
        worst_exp = 0.0
        for i in range(modes):
            lam = b.eigenvalues[i]
            worst_exp = max(worst_exp, float(np.abs(prof_cols[f"theta{i + 1}"] - np.exp(-np.sqrt(lam) * y))[window].max()))
        certs.append(Certificate("half-order-profile", worst_exp <= 1e-6, 1e-6 - worst_exp, 1e-6, "on [0, Y/2]"))
    # deterministic test field with algebraic decay and alternating signs
    m = min(16, b.n_modes)
    coeffs = np.zeros(b.n_modes)
    coeffs[:m] = (-1.0) ** np.arange(m) / np.arange(1, m + 1) ** 2
    U = extend_field(b, coeffs, s, yg)
    trace_err = float(np.abs(U.trace() - synthesize(b, coeffs)).max())
    certs.append(Certificate("trace-identity", trace_err == 0.0, -trace_err, 0.0))
    e_cyl = cylinder_energy(U)
    e_spec = cal.constant * hs_norm(b, coeffs, s) ** 2
    rel_e = abs(e_cyl / e_spec - 1.0)
    certs.append(Certificate("energy-proportionality", rel_e <= 0.01, 0.01 - rel_e, 0.01))
    sol = solve_regularized(b, cfg.exponents, cfg.eps, opts=cfg.options)
    g = SingularRHS(cfg.p, cfg.eps)
    _, pairing = energy_pairing(b, sol.solution, s, g)
    e_chain = cylinder_energy(extend_field(b, sol.coefficients, s, yg)) / cal.constant
    rel_c = abs(e_chain / pairing - 1.0)
    certs.append(Certificate("regularized-energy-chain", rel_c <= 0.01, 0.01 - rel_c, 0.01,
                             f"eps={cfg.eps:.6g}"))
    out.add(certs, "extension")
    art.write_columns("extension_calibration.csv", {
        "mode": np.arange(1, modes + 1), "lambda": b.eigenvalues[:modes], "ratio": cal.ratios})
    art.write_columns("extension_profiles.csv", prof_cols)
    out.calibration = {"s": s, "constant": cal.constant, "spread": cal.spread, "ratios": cal.ratios,
                       "tolerance": cal.tolerance, "closed_form": closed,
                       "ygrid": {"m": yg.size, "gamma": yg.gamma, "y_max": yg.y_max},
                       "profile_bessel_error": worst_bessel, "energy_relative_error": rel_e,
                       "energy_chain_relative_error": rel_c}
    return out


def probe_run(cfg: RunConfig, art: RunArtifacts) -> Outcome:
    out = Outcome()
    b = _basis(cfg)
    sa, sb = cfg.schedule, cfg.probe_schedule
    distinct = uniqueness_probe(b, cfg.exponents, sa, sb, cfg.options)
    fresh = uniqueness_probe(b, cfg.exponents, sa, sa, cfg.options, warm_b=False)
    out.add([
        Certificate("probe-distinct-schedules", distinct.passed, distinct.threshold - distinct.sup_difference,
                    distinct.threshold, f"ratios {sa.ratio:g} and {sb.ratio:g}"),
        Certificate("probe-warm-vs-fresh", fresh.passed, fresh.threshold - fresh.sup_difference,
                    fresh.threshold),
    ], "probe")
    art.write_solution("probe_limit_a.csv", b.grid, distinct.limit_a)
    art.write_solution("probe_limit_b.csv", b.grid, distinct.limit_b)
    art.write_solution("probe_limit_fresh.csv", b.grid, fresh.limit_b)
    out.traces["probe"] = {
        "schedule_a": {"eps0": sa.eps0, "ratio": sa.ratio, "steps": sa.steps},
        "schedule_b": {"eps0": sb.eps0, "ratio": sb.ratio, "steps": sb.steps},
        "eps_final": distinct.eps_end,
        "distinct_difference": distinct.sup_difference, "distinct_threshold": distinct.threshold,
        "fresh_difference": fresh.sup_difference, "fresh_threshold": fresh.threshold,
    }
    return out


def full_report(cfg: RunConfig, art: RunArtifacts) -> Outcome:
    out = Outcome()
    for step in (basis_check, continue_run, validate_extension, probe_run):
        out.merge(step(cfg, art))
    return out


PIPELINES = {
    "basis-check": basis_check,
    "solve-eps": solve_eps,
    "continue": continue_run,
    "validate-extension": validate_extension,
    "uniqueness-probe": probe_run,
    "report": full_report,
}


def run_command(command: str, cfg: RunConfig, out_dir=None) -> tuple[int, RunArtifacts]:
    """Run one pipeline into a fresh directory and return the exit status."""
    if command not in PIPELINES:
        raise ValueError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    root = Path(out_dir) if out_dir is not None else Path(cfg.directory) / command
    art = RunArtifacts.create(root)
    try:
        outcome = PIPELINES[command](cfg, art)
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        log.error("%s failed: %s", command, exc)
        outcome = Outcome()
        outcome.add([Certificate("pipeline-completed", False, 0.0, 0.0, f"{type(exc).__name__}: {exc}")],
                    command)
    echo = {"command": command, **config_to_dict(cfg)}
    art.write_json("report.json", {
        "config_echo": echo,
        "certificates": outcome.certificates,
        "traces": outcome.traces,
        "limit": outcome.limit,
        "calibration": outcome.calibration,
    })
    failed = outcome.first_failed
    if failed is not None:
        n_failed = sum(not c["passed"] for c in outcome.certificates)
        art.write_json("failure.json", {"command": command, "first_failed": failed, "failed_count": n_failed})
    art.finalize()
    return (EXIT_OK if failed is None else EXIT_FAILED), art


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracsing", description=__doc__.split("\n\n")[0],
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="TOML run configuration")
    ap.add_argument("--out", help="run directory (must be new or empty); default <output.directory>/<command>")
    ap.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        status, art = run_command(args.command, cfg, args.out)
    except FileExistsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if status == EXIT_OK:
        print(f"{args.command}: all certificates passed -> {art.root}")
    else:
        failure = (art.root / "failure.json").read_text(encoding="utf-8")
        print(f"{args.command}: certificate failed -> {art.root}\n{failure}", end="")
    return status


if __name__ == "__main__":
    sys.exit(main())
