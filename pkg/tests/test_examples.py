"""Worked examples for each module, with closed-form or independent oracles."""

import numpy as np
import pytest

from fracsing.continuation import EpsSchedule, run_continuation
from fracsing.extension import (bessel_profile, calibrate_cs, cylinder_energy, extend_field, extension_profile,
                                extract_flux, ygrid_for_basis)
from fracsing.geometry import Domain, analyze, default_basis, orthonormality_error, synthesize
from fracsing.monotone import build_supersolution, compare_order, monotone_iterate, solve_regularized
from fracsing.nonlinearity import GeneralRHS, SingularRHS, verify_g1_g2
from fracsing.spectral import FracExponent, apply_fractional, hs_norm, solve_shifted, weak_residual
from oracles import diagonal_picard, odd_series_midpoint


def unit(n, i):
    e = np.zeros(n)
    e[i] = 1.0
    return e


# geometry ------------------------------------------------------------------

def test_first_eigenpairs(interval_basis, square_basis):
    x = interval_basis.grid.axes[0]
    assert interval_basis.eigenvalues[0] == pytest.approx(1.0, rel=1e-15)
    assert np.allclose(interval_basis.phi[0], np.sqrt(2 / np.pi) * np.sin(x), atol=1e-15)
    assert square_basis.eigenvalues[0] == pytest.approx(2.0, rel=1e-15)


def test_small_basis_orthonormal():
    assert orthonormality_error(default_basis(Domain.interval(), 16)) < 1e-10


def test_analyze_examples(interval_basis):
    n = interval_basis.n_modes
    assert np.allclose(analyze(interval_basis, interval_basis.phi[1]), unit(n, 1), atol=1e-10)
    assert np.all(analyze(interval_basis, np.zeros(interval_basis.grid.shape)) == 0)
    c = analyze(interval_basis, np.ones(interval_basis.grid.shape))
    k = np.arange(1, 21)
    exact = np.where(k % 2 == 1, 2 * np.sqrt(2 / np.pi) / k, 0.0)
    assert np.abs(c[:20] - exact).max() < 1e-4


def test_synthesize_examples(interval_basis):
    assert np.array_equal(synthesize(interval_basis, unit(interval_basis.n_modes, 0)), interval_basis.phi[0])


def test_projection_error_decreases_with_modes():
    errs = []
    for n in (32, 64):
        b = default_basis(Domain.interval(), n)
        x = b.grid.axes[0]
        f = x * (np.pi - x) * np.exp(x)
        errs.append(np.abs(synthesize(b, analyze(b, f)) - f).max())
    assert errs[1] < errs[0] / 2


# spectral ------------------------------------------------------------------

def test_fractional_power_examples(interval_basis):
    n = interval_basis.n_modes
    for s in (0.1, 0.5, 0.9):
        assert np.array_equal(apply_fractional(interval_basis, unit(n, 0), s), unit(n, 0))
    assert np.allclose(apply_fractional(interval_basis, unit(n, 1), 0.5), 2 * unit(n, 1), rtol=1e-15)
    assert np.allclose(solve_shifted(interval_basis, unit(n, 1), 0.3), 2 ** -0.6 * unit(n, 1), rtol=1e-15)
    assert hs_norm(interval_basis, unit(n, 0), 0.7) == pytest.approx(1.0)
    assert hs_norm(interval_basis, np.zeros(n), 0.7) == 0.0


def test_series_oracle_value():
    assert odd_series_midpoint() == pytest.approx(1.16624, abs=1e-5)


@pytest.mark.parametrize("s,midpoint", [(1.0, np.pi**2 / 8), (0.5, odd_series_midpoint())])
def test_unit_rhs_midpoint(interval_basis, s, midpoint):
    c = solve_shifted(interval_basis, analyze(interval_basis, np.ones(interval_basis.grid.shape)), s)
    u = synthesize(interval_basis, c)
    assert u[len(u) // 2] == pytest.approx(midpoint, abs=1e-4)


def test_weak_residual_examples(interval_basis):
    n = interval_basis.n_modes
    u = synthesize(interval_basis, solve_shifted(interval_basis, unit(n, 0), 0.4))
    assert np.abs(weak_residual(interval_basis, u, interval_basis.phi[0], 0.4, 10)).max() < 1e-10
    r = weak_residual(interval_basis, interval_basis.phi[0], np.zeros(interval_basis.grid.shape), 0.4, 3)
    assert r[0] == pytest.approx(1.0) and np.abs(r[1:]).max() < 1e-12


def test_weak_residual_of_converged_solve(interval_basis):
    sol = solve_regularized(interval_basis, FracExponent(0.5, 0.5), 0.1)
    g = SingularRHS(0.5, 0.1)
    res = weak_residual(interval_basis, sol.solution, g(sol.solution), 0.5, 10)
    assert np.abs(res).max() <= 10 * 1e-10 * max(1.0, np.abs(g(sol.solution)).max())


# nonlinearity ----------------------------------------------------------------

def test_rule_arithmetic():
    assert SingularRHS(0.5, 1.0)(0.5) == pytest.approx(0.81650, abs=1e-5)
    assert SingularRHS(0.7, 1.0)(0.0) == 1.0
    assert SingularRHS(0.5, 0.1)(-1e-12) == pytest.approx(3.16228, abs=1e-5)
    assert SingularRHS(0.5, 1.0).lipschitz_bound(0.0) == pytest.approx(0.5)
    assert SingularRHS(0.5, 0.1).lipschitz_bound(0.0) == pytest.approx(15.8114, abs=1e-4)
    assert SingularRHS(0.5, 0.01).lipschitz_bound(0.5) == pytest.approx(1.3729, abs=1e-4)


def test_g1_g2_examples():
    assert verify_g1_g2(SingularRHS(0.3)).passed
    inc = verify_g1_g2(GeneralRHS(lambda r: r))
    assert not inc.g2 and inc.violations
    bounded = verify_g1_g2(GeneralRHS(lambda r: 1 + np.exp(-r)))
    assert bounded.g2 and not bounded.g1


# monotone solver -------------------------------------------------------------

def test_supersolution_scales_with_constant_rhs(interval_basis):
    w1 = build_supersolution(interval_basis, 0.5, SingularRHS(0.5, 1.0))
    w2 = build_supersolution(interval_basis, 0.5, SingularRHS(0.5, 0.25))
    assert np.allclose(w2, 2 * w1, rtol=1e-14, atol=1e-15)
    assert np.all(SingularRHS(0.5, 0.25)(w2) <= 0.25**-0.5)
    assert w2[interval_basis.grid.interior].min() > -1e-8
    x = interval_basis.grid.axes[0]
    w = build_supersolution(interval_basis, 1.0, SingularRHS(0.5, 1.0))
    assert w[len(x) // 2] == pytest.approx(1.2337, abs=1e-4)


def test_tight_bracket_needs_no_iterations(interval_basis):
    g = SingularRHS(0.5, 0.2)
    u = solve_regularized(interval_basis, FracExponent(0.5, 0.5), 0.2).solution
    br = monotone_iterate(interval_basis, 0.5, g, u, u)
    assert br.ascending.iterations == 0 and br.descending.iterations == 0
    assert br.gap <= 1e-10


def test_compare_order_modes(interval_basis):
    z = np.zeros(interval_basis.grid.shape)
    assert compare_order(interval_basis.phi[0], z, 1e-12)[0] == "geq"
    assert compare_order(interval_basis.phi[1], z, 1e-12)[0] == "incomparable"


def test_half_order_against_diagonal_picard():
    b = default_basis(Domain.interval(), 32)
    sol = solve_regularized(b, FracExponent(0.5, 0.5), 1.0)
    _, ref = diagonal_picard(32, b.grid.shape[0], 0.5, 0.5, 1.0)
    assert np.abs(sol.bracket.upper - sol.bracket.lower).max() <= 1e-8
    assert sol.energy_defect <= 1e-8
    assert np.abs(sol.solution - ref).max() < 1e-11


def test_solution_below_supersolution_for_large_eps(interval_basis):
    for eps in (1.0, 2.0):
        sol = solve_regularized(interval_basis, FracExponent(0.5, 0.3), eps)
        assert sol.passed and np.all(sol.solution <= sol.supersolution + 1e-8)


# continuation ----------------------------------------------------------------

def test_single_step_schedule_is_one_solve(interval_basis):
    ex = FracExponent(0.5, 0.5)
    rep = run_continuation(interval_basis, ex, EpsSchedule(0.5, 0.5, 0))
    direct = solve_regularized(interval_basis, ex, 0.5)
    assert np.array_equal(rep.limit, direct.solution)


def test_first_ordering_step(interval_basis):
    rep = run_continuation(interval_basis, FracExponent(0.5, 0.5), EpsSchedule(0.5, 0.5, 1))
    u_d, u_e = rep.steps[0].solve.solution, rep.steps[1].solve.solution
    assert np.all(u_e >= u_d - 1e-8)
    assert np.all(0.25 + u_e <= 0.5 + u_d + 1e-8)


def test_same_schedule_reproducible(small_basis):
    ex = FracExponent(0.5, 0.5)
    a = run_continuation(small_basis, ex, EpsSchedule(steps=6)).limit
    b = run_continuation(small_basis, ex, EpsSchedule(steps=6)).limit
    assert np.abs(a - b).max() <= 1e-14


# extension -------------------------------------------------------------------

@pytest.fixture(scope="module")
def ext_basis():
    return default_basis(Domain.interval(), 16)


def test_bessel_oracle_half_order():
    z = np.linspace(0, 20, 401)
    assert np.allclose(bessel_profile(1.0, 0.5, z), np.exp(-z), rtol=1e-13, atol=1e-300)


@pytest.mark.parametrize("s", [0.25, 0.75])
def test_bessel_relative_window(ext_basis, s):
    yg = ygrid_for_basis(ext_basis)
    sel = (yg.nodes > 0) & (yg.nodes <= yg.y_max / 2)
    for lam in ext_basis.eigenvalues[:3]:
        ref = bessel_profile(lam, s, yg.nodes[sel])
        th = extension_profile(lam, s, yg)[sel]
        assert np.abs(th / ref - 1).max() < 5e-4


def test_single_mode_extension(ext_basis):
    yg = ygrid_for_basis(ext_basis)
    e1 = unit(ext_basis.n_modes, 0)
    U = extend_field(ext_basis, e1, 0.5, yg)
    assert np.array_equal(U.trace(), ext_basis.phi[0])
    assert np.allclose(U.at_height(10), ext_basis.phi[0] * U.profiles[0, 10])
    Z = extend_field(ext_basis, np.zeros(ext_basis.n_modes), 0.5, yg)
    assert np.all(Z.trace() == 0) and np.all(extract_flux(Z) == 0) and cylinder_energy(Z) == 0


def test_half_order_flux(ext_basis):
    yg = ygrid_for_basis(ext_basis)
    c = np.zeros(ext_basis.n_modes)
    c[[0, 3]] = [1.5, -0.25]
    flux = extract_flux(extend_field(ext_basis, c, 0.5, yg))
    assert flux[[0, 3]] == pytest.approx(np.sqrt(ext_basis.eigenvalues[[0, 3]]) * c[[0, 3]], rel=1e-2)


def test_flux_proportional_to_fractional_power(ext_basis):
    yg = ygrid_for_basis(ext_basis)
    s = 0.3
    c = np.zeros(ext_basis.n_modes)
    c[:5] = [1.0, -0.5, 0.25, 0.1, -0.05]
    cs = calibrate_cs(ext_basis, s, 5, yg).constant
    flux = extract_flux(extend_field(ext_basis, c, s, yg))
    assert flux[:5] == pytest.approx(cs * apply_fractional(ext_basis, c, s)[:5], rel=1e-2)


def test_unit_mode_energy_half_order(ext_basis):
    U = extend_field(ext_basis, unit(ext_basis.n_modes, 0), 0.5, ygrid_for_basis(ext_basis))
    assert cylinder_energy(U) == pytest.approx(1.0, abs=1e-4)
