"""Sub/supersolution monotone iteration for ``(-Laplacian)^s u = g(u)``.

With a shift ``M >= |g'|`` on the bracket, the map

    T(u) = ((-Laplacian)^s + M)^-1 (g(u) + M u)

is order preserving, so iterating it from a subsolution gives a
nondecreasing sequence and from a supersolution a nonincreasing one, both
trapped in the bracket.  Two shift policies are available:

``"fixed"``
    scalar ``M = 1.1 * sup |g'|`` over ``[max(0, min sub), inf)``.  The
    shifted operator is diagonal in the eigenbasis.
``"bracket-aware"``
    nodal ``M(x) = 1.1 * sup |g'|`` over ``[sub(x), inf)``.  The shifted
    operator is then a dense ``n_modes x n_modes`` Galerkin matrix, factored
    whenever the shift changes.  Every ascending iterate is a subsolution,
    so the ascending run rebuilds the shift from its current iterate once
    the old one overshoots by 2x, and the descending run uses the ascending
    limit as its lower end.  At small eps this removes the near-unit
    contraction factor a scalar shift would impose.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .geometry import EigenBasis, analyze, synthesize
from .nonlinearity import SingularRHS
from .spectral import FracExponent, check_order, interior_inner, solve_shifted

log = logging.getLogger(__name__)

SHIFT_POLICIES = ("fixed", "bracket-aware")


@dataclass
class SolveOptions:
    tol_inner: float = 1e-10
    max_iter: int = 200_000
    shift: str = "bracket-aware"
    tol_pos: float = 1e-8
    n_test: int = 10
    shift_factor: float = 1.1
    energy_tol: float = 1e-6

    def __post_init__(self):
        if self.tol_inner <= 0 or self.tol_pos <= 0 or self.energy_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.shift not in SHIFT_POLICIES:
            raise ValueError(f"shift policy must be one of {SHIFT_POLICIES}, got {self.shift!r}")
        if self.shift_factor < 1.0:
            raise ValueError("shift_factor below 1 does not dominate g'")
        if self.n_test < 1:
            raise ValueError("n_test must be at least 1")


@dataclass
class Certificate:
    """A named pass/fail check with its worst observed margin.

    ``margin`` is signed so that ``margin >= -tolerance`` means pass, except
    for checks stated as upper bounds, where ``value <= tolerance`` is used
    and ``margin = tolerance - value``.
    """

    name: str
    passed: bool
    margin: float
    tolerance: float
    detail: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "margin": float(self.margin),
                "tolerance": float(self.tolerance), "detail": self.detail}


@dataclass
class SequenceTrace:
    direction: str
    iterations: int = 0
    converged: bool = False
    changes: list[float] = field(default_factory=list)
    monotone_margin: float = 0.0
    lower_margin: float = np.inf
    upper_margin: float = np.inf
    energy_defect: float = np.nan
    refactorizations: int = 0


@dataclass
class BracketReport:
    lower: np.ndarray
    upper: np.ndarray
    gap: float
    ascending: SequenceTrace
    descending: SequenceTrace
    certificates: list[Certificate]
    shift_max: float
    residual_max: float = np.nan

    @property
    def converged(self) -> bool:
        return self.ascending.converged and self.descending.converged

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.certificates)


class ShiftedMap:
    """The order-preserving fixed-point map ``T`` for one bracket."""

    def __init__(self, basis: EigenBasis, s: float, g, shift):
        self.basis = basis
        self.g = g
        self.lam_s = basis.powers(check_order(s))
        self.shift = np.asarray(shift, dtype=float)
        B, Bw = basis._flat, basis._flat_weighted
        interior = basis.grid.interior
        if self.shift.ndim == 0 or np.ptp(self.shift[interior]) == 0.0:
            # constant on the interior: the Galerkin shift matrix is mu * identity
            mu = float(self.shift) if self.shift.ndim == 0 else float(self.shift[interior][0])
            self._diag = self.lam_s + mu
            self._chol = None
        else:
            A = (Bw * self.shift.ravel()) @ B.T
            A[np.diag_indices_from(A)] += self.lam_s
            self._chol = cho_factor(A)

    def coefficients(self, u: np.ndarray) -> np.ndarray:
        rhs = self.g(u) + self.shift * u
        b = analyze(self.basis, rhs)
        if self._chol is None:
            return b / self._diag
        return cho_solve(self._chol, b)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return synthesize(self.basis, self.coefficients(u))


def energy_pairing(basis: EigenBasis, u: np.ndarray, s: float, g) -> tuple[float, float]:
    """``(sum lambda^s u_i^2, <g(u), u>)``: the weak form tested with ``u`` itself."""
    c = analyze(basis, u)
    return float(np.sum(basis.powers(s) * c**2)), float(np.sum(basis.grid.weights * g(u) * u))


def _energy_defect(basis, u, s, g) -> float:
    lhs, rhs = energy_pairing(basis, u, s, g)
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), np.finfo(float).tiny)


def choose_shift(g, sub: np.ndarray, interior: np.ndarray, opts: SolveOptions):
    """Shift dominating ``|g'|`` on the bracket, per the selected policy."""
    if opts.shift == "fixed":
        return opts.shift_factor * g.lipschitz_bound(max(0.0, float(sub.min())))
    # boundary nodes carry zero quadrature weight against every mode
    lower = np.maximum(np.where(interior, sub, sub[interior].max()), 0.0)
    return np.where(interior, opts.shift_factor * g.lipschitz_bound(lower), 0.0)


def _run_sequence(T: ShiftedMap, start, sub, sup, direction, opts, s,
                  adapt=None) -> tuple[np.ndarray, SequenceTrace, ShiftedMap]:
    """Iterate ``T`` from ``start``.

    ``adapt(u)``, if given, returns the shift valid on ``[u, sup]``; it is
    used to rebuild ``T`` once the current shift overshoots by 2x.  Only
    the ascending run adapts: its iterates are subsolutions, so each one is
    a legitimate new lower end of the bracket.
    """
    tr = SequenceTrace(direction)
    sign = 1.0 if direction == "ascending" else -1.0
    u = np.array(start, dtype=float)
    basis = T.basis
    for _ in range(opts.max_iter):
        new = T(u)
        step = new - u
        change = float(np.abs(step).max())
        tr.monotone_margin = min(tr.monotone_margin, float((sign * step).min()))
        tr.lower_margin = min(tr.lower_margin, float((new - sub).min()))
        tr.upper_margin = min(tr.upper_margin, float((sup - new).min()))
        u = new
        if change <= opts.tol_inner:
            tr.energy_defect = _energy_defect(basis, u, s, T.g)
            if tr.energy_defect <= opts.energy_tol:
                tr.converged = True
                break
        tr.changes.append(change)
        tr.iterations += 1
        if adapt is not None:
            cand = adapt(u)
            if np.any(T.shift > 2.0 * cand):
                T = ShiftedMap(basis, s, T.g, cand)
                tr.refactorizations += 1
    else:
        tr.energy_defect = _energy_defect(basis, u, s, T.g)
        log.warning("%s sequence stopped after %d iterations (last change %.3e)",
                    direction, opts.max_iter, tr.changes[-1] if tr.changes else 0.0)
    return u, tr, T


def monotone_iterate(basis: EigenBasis, s: float, g, sub, sup, opts: SolveOptions | None = None) -> BracketReport:
    """Iterate the shifted map upward from ``sub`` and downward from ``sup``.

    ``sub`` and ``sup`` are nodal fields; they must be ordered and pass a
    sign check of the weak residual against ``phi_1``.  Non-convergence and
    ordering failures are reported through the certificates, not raised.
    """
    opts = opts or SolveOptions()
    s = check_order(s)
    sub = np.asarray(sub, dtype=float)
    sup = np.asarray(sup, dtype=float)
    if sub.shape != basis.grid.shape or sup.shape != basis.grid.shape:
        raise ValueError("sub and super must be nodal fields on the basis grid")
    tol = opts.tol_pos
    worst = float((sup - sub).min())
    if worst < -tol:
        raise ValueError(f"bracket is not ordered: min(super - sub) = {worst:.3e}")
    r_sub, scale_sub = _first_mode_defect(basis, sub, s, g)
    r_sup, scale_sup = _first_mode_defect(basis, sup, s, g)
    if r_sub > tol * scale_sub:
        raise ValueError(f"sub is not a subsolution: first-mode defect {r_sub:.3e} > 0")
    if r_sup < -tol * scale_sup:
        raise ValueError(f"super is not a supersolution: first-mode defect {r_sup:.3e} < 0")

    interior = basis.grid.interior
    T = ShiftedMap(basis, s, g, choose_shift(g, sub, interior, opts))
    adapt = None
    if opts.shift == "bracket-aware":
        def adapt(u):
            return choose_shift(g, np.maximum(u, sub), interior, opts)
    lower, asc, T = _run_sequence(T, sub, sub, sup, "ascending", opts, s, adapt)
    if adapt is not None and asc.converged:
        # the minimal solution is the tightest lower end for the descent
        T = ShiftedMap(basis, s, g, adapt(lower))
    upper, desc, T = _run_sequence(T, sup, sub, sup, "descending", opts, s)
    shift = T.shift
    gap = float(np.abs(upper - lower).max())

    certs = [
        Certificate("ascending-monotone", asc.monotone_margin >= -tol, asc.monotone_margin, tol),
        Certificate("descending-monotone", desc.monotone_margin >= -tol, desc.monotone_margin, tol),
        Certificate("bracket-confinement",
                    min(asc.lower_margin, asc.upper_margin, desc.lower_margin, desc.upper_margin) >= -tol,
                    min(asc.lower_margin, asc.upper_margin, desc.lower_margin, desc.upper_margin), tol),
        Certificate("converged", asc.converged and desc.converged, 0.0, opts.tol_inner,
                    f"iterations ascending={asc.iterations} descending={desc.iterations}"),
        Certificate("two-sided-gap", gap <= 10 * opts.tol_inner, 10 * opts.tol_inner - gap,
                    10 * opts.tol_inner),
    ]
    worst_order = min(c.margin for c in certs[:3])
    if worst_order < -10 * tol:
        certs[0].detail = "ordering violated beyond 10 tol_pos: discretization too coarse, increase n_modes"
        log.warning(certs[0].detail)
    rep = BracketReport(lower, upper, gap, asc, desc, certs, float(np.max(shift)))
    rep.residual_max = float(np.abs(_residual(basis, lower, s, g, opts.n_test)).max())
    return rep


def _first_mode_defect(basis, v, s, g) -> tuple[float, float]:
    lam1 = basis.powers(s)[0]
    c1 = analyze(basis, v)[0]
    gv = interior_inner(basis, g(v))[0]
    return float(lam1 * c1 - gv), max(1.0, abs(gv))


def _residual(basis, u, s, g, m) -> np.ndarray:
    m = min(m, basis.n_modes)
    return basis.powers(s)[:m] * analyze(basis, u)[:m] - interior_inner(basis, g(u))[:m]


def build_supersolution(basis: EigenBasis, s: float, g: SingularRHS) -> np.ndarray:
    """Solution of ``(-Laplacian)^s w = eps^-p``, a supersolution since ``w >= 0``."""
    if g.eps <= 0:
        raise ValueError("the supersolution needs eps > 0")
    rhs = np.full(basis.grid.shape, g.eps ** (-g.p))
    return synthesize(basis, solve_shifted(basis, analyze(basis, rhs), s, 0.0))


def compare_order(u, v, tol: float) -> tuple[str, float]:
    """Classify ``u`` against ``v`` nodewise: ``leq``, ``geq``, ``equal`` or ``incomparable``.

    The margin is the most violating signed difference for the returned
    relation (``min(u - v)`` for ``geq``, ``min(v - u)`` for ``leq``,
    ``-max|u - v|`` for ``equal``, and for ``incomparable`` the smaller of
    the two one-sided violations).
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError(f"grid mismatch: {u.shape} vs {v.shape}")
    d = u - v
    lo, hi = float(d.min()), float(d.max())
    if lo >= -tol and hi <= tol:
        return "equal", -max(abs(lo), abs(hi))
    if lo >= -tol:
        return "geq", lo
    if hi <= tol:
        return "leq", -hi
    return "incomparable", min(lo, -hi)


@dataclass
class SolveReport:
    """One regularized solve: the bracket run plus energy and residual diagnostics."""

    eps: float
    s: float
    p: float
    solution: np.ndarray
    coefficients: np.ndarray
    bracket: BracketReport
    supersolution: np.ndarray
    hs_energy: float
    pairing: float
    energy_defect: float
    bound_side: float
    residual: np.ndarray
    min_interior: float
    certificates: list[Certificate]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.certificates)


def solve_regularized(basis: EigenBasis, exps: FracExponent, eps: float, warm=None,
                      opts: SolveOptions | None = None) -> SolveReport:
    """Solve ``(-Laplacian)^s u = (eps + u)^-p`` between ``warm`` (or 0) and the supersolution.

    The returned solution is the ascending (minimal) limit; the descending
    limit is kept in ``report.bracket.upper``.  The two are never averaged.
    """
    opts = opts or SolveOptions()
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    g = SingularRHS(exps.p, eps)
    sup = build_supersolution(basis, exps.s, g)
    sub = np.zeros(basis.grid.shape) if warm is None else np.asarray(warm, dtype=float)
    br = monotone_iterate(basis, exps.s, g, sub, sup, opts)
    u = br.lower
    coeffs = analyze(basis, u)
    hs2, pairing = energy_pairing(basis, u, exps.s, g)
    defect = abs(hs2 - pairing) / max(abs(hs2), np.finfo(float).tiny)
    bound = float(np.sum(basis.grid.weights * (1.0 + np.maximum(u, 0.0)) ** (1.0 - exps.p)))
    res = _residual(basis, u, exps.s, g, opts.n_test)
    interior = basis.grid.interior
    min_int = float(u[interior].min())
    tol = opts.tol_pos
    below_super = float((sup - u).min())
    certs = list(br.certificates) + [
        Certificate("energy-identity", defect <= opts.energy_tol, opts.energy_tol - defect, opts.energy_tol),
        Certificate("interior-positive", min_int >= -tol, min_int, tol),
        Certificate("below-supersolution", below_super >= -tol, below_super, tol),
    ]
    if eps <= 1.0:
        # (eps+u)^-p u <= (eps+u)^(1-p) <= (1+u)^(1-p) needs eps <= 1
        certs.append(Certificate("pairing-below-bound", pairing <= bound * (1 + 1e-12), bound - pairing, 0.0))
    return SolveReport(eps, exps.s, exps.p, u, coeffs, br, sup, hs2, pairing, defect, bound,
                       res, min_int, certs)
