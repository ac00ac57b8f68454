import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracsing.extension import (ADEQUACY, UnresolvedLayerError, bessel_profile, calibrate_cs,
                                closed_form_constant, cylinder_energy, extend_field, extension_profile,
                                extract_flux, fit_layer, make_ygrid, profile_deviation, ygrid_for_basis)
from fracsing.geometry import Domain, default_basis, synthesize
from fracsing.monotone import solve_regularized
from fracsing.spectral import FracExponent, hs_norm
from oracles import exp_profile


@pytest.fixture(scope="module")
def basis():
    return default_basis(Domain.interval(), 64)


@pytest.fixture(scope="module")
def yg(basis):
    return ygrid_for_basis(basis)


def test_ygrid_validation():
    with pytest.raises(ValueError):
        make_ygrid(1.0, 4)
    with pytest.raises(ValueError):
        make_ygrid(1.0, 100, 0.5)
    g = make_ygrid(2.0, 100, 3.0)
    assert g.y_max == 2.0 and g.size == 100 and np.all(np.diff(g.nodes) > 0)


def test_truncation_adequacy_enforced():
    with pytest.raises(ValueError, match="truncation height"):
        extension_profile(1.0, 0.5, make_ygrid(ADEQUACY / 2, 100))


def test_half_order_profile_is_exponential(yg):
    window = yg.nodes <= yg.y_max / 2
    for lam in (1.0, 4.0, 25.0):
        th = extension_profile(lam, 0.5, yg)
        assert th[0] == 1.0 and th[-1] == 0.0
        assert np.abs(th - exp_profile(lam, yg.nodes))[window].max() < 1e-6


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_profile_matches_bessel(yg, s):
    window = yg.nodes <= yg.y_max / 2
    for lam in (1.0, 9.0):
        th = extension_profile(lam, s, yg)
        assert np.abs(th - bessel_profile(lam, s, yg.nodes))[window].max() < 1e-4


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_calibration(basis, yg, s):
    cal = calibrate_cs(basis, s, 5, yg)
    assert cal.passed and cal.spread <= 0.01
    assert cal.constant == pytest.approx(closed_form_constant(s), rel=1e-3)


def test_closed_form_constant_half():
    assert closed_form_constant(0.5) == pytest.approx(1.0, rel=1e-15)


def test_flux_is_linear_in_coefficients(basis, yg):
    c = np.zeros(basis.n_modes)
    c[[0, 2]] = [2.0, -0.5]
    flux = extract_flux(extend_field(basis, c, 0.5, yg))
    cs = calibrate_cs(basis, 0.5, 5, yg).constant
    assert flux[[0, 2]] == pytest.approx(cs * basis.eigenvalues[[0, 2]] ** 0.5 * c[[0, 2]], rel=1e-3)


def test_trace_identity_exact(basis, yg, rng):
    c = rng.standard_normal(basis.n_modes) / np.arange(1, 65) ** 2
    U = extend_field(basis, c, 0.3, yg)
    assert np.array_equal(U.trace(), synthesize(basis, c))


@settings(max_examples=10, deadline=None)
@given(st.sampled_from([0.25, 0.5, 0.75]),
       st.lists(st.floats(-1, 1), min_size=8, max_size=8).filter(lambda v: max(map(abs, v)) > 1e-3))
def test_energy_proportionality(s, coeffs):
    basis = default_basis(Domain.interval(), 8)
    yg = ygrid_for_basis(basis)
    cs = calibrate_cs(basis, s, 5, yg).constant
    c = np.array(coeffs)
    e = cylinder_energy(extend_field(basis, c, s, yg))
    assert e == pytest.approx(cs * hs_norm(basis, c, s) ** 2, rel=1e-2)


def test_regularized_energy_chain(basis, yg):
    sol = solve_regularized(basis, FracExponent(0.5, 0.5), 0.1)
    cs = calibrate_cs(basis, 0.5, 5, yg).constant
    e = cylinder_energy(extend_field(basis, sol.coefficients, 0.5, yg)) / cs
    assert e == pytest.approx(sol.pairing, rel=1e-2)


def test_unresolved_layer_raises(yg):
    dev = profile_deviation(1.0, 0.5, yg).copy()
    dev[1:7] *= np.array([1.0, 3.0, 0.2, 5.0, 0.1, 2.0])
    with pytest.raises(UnresolvedLayerError):
        fit_layer(dev, yg, 0.5)


def test_extension_rejects_s_one(basis):
    with pytest.raises(ValueError):
        extend_field(basis, np.ones(basis.n_modes), 1.0)
