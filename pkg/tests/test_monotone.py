import numpy as np
import pytest

from fracsing.geometry import Domain, analyze, build_basis, default_basis, make_grid, synthesize
from fracsing.monotone import (SolveOptions, build_supersolution, choose_shift, compare_order,
                               energy_pairing, monotone_iterate, solve_regularized)
from fracsing.nonlinearity import ConstantRHS, SingularRHS
from fracsing.spectral import FracExponent, solve_shifted
from oracles import fd_newton, parabola


def test_options_validation():
    with pytest.raises(ValueError):
        SolveOptions(shift="magic")
    with pytest.raises(ValueError):
        SolveOptions(shift_factor=0.9)
    with pytest.raises(ValueError):
        SolveOptions(tol_inner=0.0)


def test_supersolution_classical_parabola(interval_basis):
    w = build_supersolution(interval_basis, 1.0, SingularRHS(0.5, 1.0))
    x = interval_basis.grid.axes[0]
    assert np.abs(w - parabola(x)).max() < 1e-4


def test_supersolution_needs_eps(interval_basis):
    with pytest.raises(ValueError):
        build_supersolution(interval_basis, 0.5, SingularRHS(0.5, 0.0))


def test_linear_rule_reproduces_spectral_solve(interval_basis):
    g = ConstantRHS(1.0)
    exact = synthesize(interval_basis, solve_shifted(interval_basis, analyze(interval_basis, np.ones(interval_basis.grid.shape)), 0.5))
    br = monotone_iterate(interval_basis, 0.5, g, np.zeros_like(exact), 2 * exact + 0.1)
    assert br.passed
    assert np.abs(br.lower - exact).max() < 1e-12


def test_classical_case_matches_fd_newton():
    dom = Domain.interval()
    b = build_basis(dom, 512, make_grid(dom, 4097))
    sol = solve_regularized(b, FracExponent(1.0, 0.5), 1.0)
    x, ref = fd_newton(4095, 1.0, 0.5)
    assert sol.passed
    assert np.abs(sol.solution - ref).max() < 2e-6


@pytest.mark.parametrize("s,p,eps", [(0.25, 0.9, 0.1), (0.5, 0.5, 0.5), (0.75, 0.3, 0.01)])
def test_regularized_solve_certificates(interval_basis, s, p, eps):
    sol = solve_regularized(interval_basis, FracExponent(s, p), eps)
    names = {c.name for c in sol.certificates}
    assert {"ascending-monotone", "descending-monotone", "bracket-confinement", "two-sided-gap",
            "energy-identity", "interior-positive", "below-supersolution"} <= names
    assert sol.passed, [c for c in sol.certificates if not c.passed]
    assert sol.bracket.gap <= 1e-9
    assert np.all(sol.solution <= sol.supersolution + 1e-8)


def test_rectangle_solve(square_basis):
    sol = solve_regularized(square_basis, FracExponent(0.5, 0.5), 0.1)
    assert sol.passed
    u = sol.solution
    # symmetric domain, symmetric solution
    assert np.abs(u - u.T).max() < 1e-12


def test_policies_and_shift_factor_agree(interval_basis):
    ex = FracExponent(0.5, 0.5)
    ref = solve_regularized(interval_basis, ex, 0.5).solution
    for opts in (SolveOptions(shift="fixed"), SolveOptions(shift_factor=2.0), SolveOptions(shift="fixed", shift_factor=3.0)):
        sol = solve_regularized(interval_basis, ex, 0.5, opts=opts)
        assert sol.passed
        assert np.abs(sol.solution - ref).max() <= 1e-9


def test_warm_start_matches_cold(interval_basis):
    ex = FracExponent(0.5, 0.5)
    warm = solve_regularized(interval_basis, ex, 0.2).solution
    a = solve_regularized(interval_basis, ex, 0.1, warm=warm)
    b = solve_regularized(interval_basis, ex, 0.1)
    assert a.passed and b.passed
    assert np.abs(a.solution - b.solution).max() <= 1e-9


def test_unordered_bracket_rejected(small_basis):
    g = SingularRHS(0.5, 0.5)
    sup = build_supersolution(small_basis, 0.5, g)
    with pytest.raises(ValueError, match="not ordered"):
        monotone_iterate(small_basis, 0.5, g, sup + 0.1, sup)


def test_non_subsolution_rejected(small_basis):
    g = SingularRHS(0.5, 0.5)
    sup = build_supersolution(small_basis, 0.5, g)
    with pytest.raises(ValueError, match="not a subsolution"):
        monotone_iterate(small_basis, 0.5, g, 0.99 * sup, sup)


def test_nonconvergence_is_certified_not_hidden(small_basis):
    sol = solve_regularized(small_basis, FracExponent(0.5, 0.5), 0.1, opts=SolveOptions(max_iter=2))
    conv = next(c for c in sol.certificates if c.name == "converged")
    assert not conv.passed and not sol.passed


def test_bracket_aware_shift_is_nodal(small_basis):
    g = SingularRHS(0.5, 0.1)
    sub = np.where(small_basis.grid.interior, 0.3, 0.0)
    fixed = choose_shift(g, sub, small_basis.grid.interior, SolveOptions(shift="fixed"))
    nodal = choose_shift(g, sub, small_basis.grid.interior, SolveOptions())
    assert np.ndim(fixed) == 0 and nodal.shape == sub.shape
    assert nodal[small_basis.grid.interior].max() == pytest.approx(1.1 * g.lipschitz_bound(0.3))


def test_energy_identity_holds(interval_basis):
    sol = solve_regularized(interval_basis, FracExponent(0.75, 0.9), 0.05)
    hs2, pairing = energy_pairing(interval_basis, sol.solution, 0.75, SingularRHS(0.9, 0.05))
    assert abs(hs2 - pairing) <= 1e-6 * hs2
    assert sol.pairing <= sol.bound_side


def test_compare_order():
    u = np.array([0.0, 1.0, 2.0])
    assert compare_order(u, u, 1e-12)[0] == "equal"
    assert compare_order(u + 1, u, 1e-12) == ("geq", 1.0)
    assert compare_order(u, u + 1, 1e-12) == ("leq", 1.0)
    rel, margin = compare_order(np.array([1.0, -1.0]), np.zeros(2), 1e-12)
    assert rel == "incomparable" and margin == -1.0
    with pytest.raises(ValueError):
        compare_order(u, u[:2], 0.0)
