"""Drive eps down to 0 with warm starts and certify the ordering of the family.

For ``eps < delta`` the regularized solutions satisfy

    u_eps >= u_delta   and   eps + u_eps <= delta + u_delta,

so consecutive solutions differ by at most ``delta - eps`` in sup-norm and
the family converges uniformly.  With a geometric schedule ending at
``eps_K`` the limit lies within ``eps_K`` of the last computed solution.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .geometry import EigenBasis, analyze, build_basis, evaluate, make_grid
from .monotone import Certificate, SolveOptions, SolveReport, solve_regularized
from .spectral import FracExponent, interior_inner

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EpsSchedule:
    """``eps_k = eps0 * ratio^k`` for ``k = 0..steps``."""

    eps0: float = 0.5
    ratio: float = 0.5
    steps: int = 14

    def __post_init__(self):
        if not 0.0 < self.eps0 < 1.0:
            raise ValueError(f"eps0 must lie in (0, 1), got {self.eps0}")
        if not 0.0 < self.ratio < 1.0:
            raise ValueError(f"ratio must lie in (0, 1), got {self.ratio}")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")

    @property
    def values(self) -> np.ndarray:
        return self.eps0 * self.ratio ** np.arange(self.steps + 1)

    @property
    def final(self) -> float:
        return float(self.values[-1])

    @classmethod
    def ending_at(cls, eps_end: float, ratio: float, eps0_max: float = 0.99) -> "EpsSchedule":
        """Shortest schedule with the given ratio whose last value is ``eps_end``."""
        steps = int(np.floor(np.log(eps_end / eps0_max) / np.log(ratio)))
        return cls(eps_end / ratio**steps, ratio, steps)


@dataclass
class StepRecord:
    eps: float
    solve: SolveReport
    warm: bool
    certificates: list[Certificate] = field(default_factory=list)
    increment: float = np.nan
    envelope: float = np.nan


@dataclass
class ContinuationReport:
    basis: EigenBasis
    exponents: FracExponent
    schedule: EpsSchedule
    steps: list[StepRecord]
    truncated: bool = False
    flags: list[str] = field(default_factory=list)
    summary: list[Certificate] = field(default_factory=list)

    @property
    def eps(self) -> np.ndarray:
        return np.array([st.eps for st in self.steps])

    @property
    def sup_norms(self) -> np.ndarray:
        return np.array([float(np.abs(st.solve.solution).max()) for st in self.steps])

    @property
    def increments(self) -> np.ndarray:
        return np.array([st.increment for st in self.steps[1:]])

    @property
    def envelopes(self) -> np.ndarray:
        return np.array([st.envelope for st in self.steps[1:]])

    @property
    def bound_sides(self) -> np.ndarray:
        return np.array([st.solve.bound_side for st in self.steps])

    @property
    def pairings(self) -> np.ndarray:
        return np.array([st.solve.pairing for st in self.steps])

    @property
    def limit(self) -> np.ndarray:
        return self.steps[-1].solve.solution

    @property
    def certificates(self) -> list[Certificate]:
        out = []
        for st in self.steps:
            out.extend(st.solve.certificates)
            out.extend(st.certificates)
        return out + self.summary

    @property
    def passed(self) -> bool:
        return not self.truncated and all(c.passed for c in self.certificates)


def ordering_certificates(u_eps, u_delta, eps: float, delta: float, tol: float) -> list[Certificate]:
    """Check ``u_eps >= u_delta``, ``eps + u_eps <= delta + u_delta`` and the sandwich bound."""
    d = np.asarray(u_eps) - np.asarray(u_delta)
    lower = float(d.min())
    upper = float((delta - eps) - d.max())
    sandwich = float(np.abs(d).max())
    tag = f"eps={eps:.6g}"
    return [
        Certificate(f"order-lower[{tag}]", lower >= -tol, lower, tol),
        Certificate(f"order-upper[{tag}]", upper >= -tol, upper, tol),
        Certificate(f"sandwich[{tag}]", sandwich <= (delta - eps) + 2 * tol,
                    (delta - eps) + 2 * tol - sandwich, 2 * tol),
    ]


def run_continuation(basis: EigenBasis, exps: FracExponent, sched: EpsSchedule | None = None,
                     opts: SolveOptions | None = None, warm_start: bool = True,
                     on_step=None) -> ContinuationReport:
    """Solve along the schedule, warm-starting each step from the previous solution.

    The previous solution ``u_delta`` is a subsolution for ``eps < delta``
    because ``(delta + r)^-p <= (eps + r)^-p``.  A failing solve truncates
    the run at the last good step.  An ordering violation beyond
    ``10 tol_pos`` is flagged and the next step restarts from 0.
    ``on_step(record)`` is called after every completed step.
    """
    sched = sched or EpsSchedule()
    opts = opts or SolveOptions()
    tol = opts.tol_pos
    rep = ContinuationReport(basis, exps, sched, [])
    prev: StepRecord | None = None
    restart = False
    for eps in sched.values:
        eps = float(eps)
        warm = prev.solve.solution if (prev is not None and warm_start and not restart) else None
        restart = False
        try:
            sol = solve_regularized(basis, exps, eps, warm=warm, opts=opts)
        except ValueError as exc:
            rep.truncated = True
            rep.flags.append(f"solve at eps={eps:.6g} failed: {exc}")
            break
        if not sol.bracket.converged:
            rep.truncated = True
            rep.flags.append(f"solve at eps={eps:.6g} did not converge")
            break
        rec = StepRecord(eps, sol, warm is not None)
        if prev is not None:
            rec.certificates = ordering_certificates(sol.solution, prev.solve.solution, eps, prev.eps, tol)
            rec.increment = float(np.abs(sol.solution - prev.solve.solution).max())
            rec.envelope = prev.eps - eps
            worst = min(c.margin for c in rec.certificates[:2])
            if worst < -10 * tol:
                rep.flags.append(f"ordering violated by {-worst:.3e} at eps={eps:.6g}; restarting from 0")
                log.warning(rep.flags[-1])
                restart = True
        rep.steps.append(rec)
        if on_step is not None:
            on_step(rec)
        prev = rec
    rep.summary = _summary_certificates(rep, tol)
    return rep


def _summary_certificates(rep: ContinuationReport, tol: float) -> list[Certificate]:
    if not rep.steps:
        return [Certificate("nonempty-run", False, 0.0, 0.0, "no step completed")]
    sup = rep.sup_norms
    bound = rep.bound_sides
    out = [
        Certificate("sup-trace-nondecreasing", bool(np.all(np.diff(sup) >= -tol)),
                    float(np.min(np.diff(sup), initial=0.0)), tol),
        Certificate("sup-trace-finite", bool(np.all(np.isfinite(sup))), 0.0, 0.0),
        Certificate("sup-trace-bounded", bool(sup.max() <= sup[-1] + rep.schedule.eps0),
                    float(sup[-1] + rep.schedule.eps0 - sup.max()), 0.0),
        Certificate("energy-bound-monotone", bool(np.all(np.diff(bound) >= -tol)),
                    float(np.min(np.diff(bound), initial=0.0)), tol,
                    "<(1+u_eps)^(1-p), 1> grows as eps decreases"),
    ]
    return out


@dataclass
class LimitEstimate:
    field: np.ndarray
    tail_bound: float
    increments: np.ndarray
    envelopes: np.ndarray
    increments_monotone: bool
    min_interior: float
    certificates: list[Certificate]


def estimate_limit(rep: ContinuationReport, tol_pos: float = 1e-8) -> LimitEstimate:
    """Limit candidate ``u_{eps_K}`` with the guaranteed tail bound ``eps_K``.

    Letting ``eps -> 0`` in the sandwich inequality gives
    ``0 <= u - u_{eps_K} <= eps_K``.
    """
    if len(rep.steps) < 3:
        raise ValueError(f"need at least 3 completed steps, have {len(rep.steps)}")
    inc = rep.increments
    env = rep.envelopes
    u = rep.limit
    interior = rep.basis.grid.interior
    min_int = float(u[interior].min())
    mono = bool(np.all(np.diff(inc) <= tol_pos))
    certs = [
        Certificate("increments-within-envelope", bool(np.all(inc <= env + 2 * tol_pos)),
                    float(np.min(env + 2 * tol_pos - inc)), 2 * tol_pos),
        Certificate("increments-nonincreasing", mono, float(-np.max(np.diff(inc), initial=0.0)), tol_pos),
        Certificate("limit-interior-positive", min_int > 0.0, min_int, 0.0),
    ]
    return LimitEstimate(u, float(rep.steps[-1].eps), inc, env, mono, min_int, certs)


def limit_residual(basis: EigenBasis, u, s: float, p: float, m: int = 10, refine: int = 16) -> np.ndarray:
    """Weak residual of the singular equation ``(-Laplacian)^s u = u^-p`` for a computed ``u``.

    The spectral representation of ``u`` is evaluated on a grid ``refine``
    times finer than the solver's, so the right-hand side integrals are not
    computed with the quadrature the solver itself used.
    """
    if refine < 1:
        raise ValueError("refine must be a positive integer")
    if not 1 <= m <= basis.n_modes:
        raise ValueError(f"test-mode count must lie in [1, {basis.n_modes}], got {m}")
    coeffs = analyze(basis, u)
    nodes = [refine * (n - 1) + 1 for n in basis.grid.shape]
    grid = make_grid(basis.domain, nodes)
    uf = evaluate(basis, coeffs, grid)
    tests = build_basis(basis.domain, m, grid)
    with np.errstate(divide="ignore"):
        rhs = np.where(grid.interior, np.maximum(uf, 0.0) ** (-p), np.inf)
    # the refined trapezoid rule integrates phi_i phi_j exactly, so the
    # coefficients of uf there are those of u
    return basis.powers(s)[:m] * coeffs[:m] - interior_inner(tests, rhs)


@dataclass
class ProbeResult:
    sup_difference: float
    threshold: float
    eps_end: float
    limit_a: np.ndarray
    limit_b: np.ndarray

    @property
    def passed(self) -> bool:
        return self.sup_difference <= self.threshold


def uniqueness_probe(basis: EigenBasis, exps: FracExponent, sched_a: EpsSchedule, sched_b: EpsSchedule,
                     opts: SolveOptions | None = None, warm_a: bool = True, warm_b: bool = True,
                     tol_match: float = 1e-12) -> ProbeResult:
    """Build the limit twice and report the sup-norm distance between the results.

    Distinct schedules pass when the distance is at most
    ``max(2 eps_K, 10 tol_inner)``.  The same schedule run twice (warm
    against fresh starts) computes the same regularized solutions, so there
    the threshold is ``10 tol_inner``.
    """
    opts = opts or SolveOptions()
    ea, eb = sched_a.final, sched_b.final
    if abs(ea - eb) > tol_match * max(ea, eb) and max(ea, eb) > tol_match:
        raise ValueError(f"schedules end at different eps: {ea:.6g} vs {eb:.6g}")
    ra = run_continuation(basis, exps, sched_a, opts, warm_start=warm_a)
    rb = run_continuation(basis, exps, sched_b, opts, warm_start=warm_b)
    if ra.truncated or rb.truncated:
        raise RuntimeError("a continuation run was truncated: " + "; ".join(ra.flags + rb.flags))
    diff = float(np.abs(ra.limit - rb.limit).max())
    eps_end = max(ea, eb)
    same = sched_a == sched_b
    threshold = 10 * opts.tol_inner if same else max(2 * eps_end, 10 * opts.tol_inner)
    return ProbeResult(diff, threshold, eps_end, ra.limit, rb.limit)
