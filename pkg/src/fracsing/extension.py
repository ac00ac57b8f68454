"""Weighted half-cylinder extension as an independent route to ``(-Laplacian)^s``.

Separating ``U(x, y) = sum_i u_i phi_i(x) theta_i(y)`` in
``div(y^(1-2s) grad U) = 0`` leaves, per mode, the profile problem

    (y^(1-2s) theta')' = lambda y^(1-2s) theta,   theta(0) = 1,  theta decaying,

solved here on a graded grid ``y_j = Y (j/M)^gamma`` truncated at ``Y``
with ``theta(Y) = 0``.  Near ``y = 0`` the profile behaves like
``1 - c y^(2s)``; the weighted flux ``-lim y^(1-2s) theta'`` is ``2 s c``
and equals ``c_s lambda^s`` for a constant ``c_s`` depending on ``s`` only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import gamma, kv

from .geometry import EigenBasis, synthesize

#: Profiles are trusted only when ``Y sqrt(lambda)`` reaches this value.
ADEQUACY = 8.0


class UnresolvedLayerError(RuntimeError):
    """The near-wall fit ``1 - c y^(2s)`` does not describe the computed profile."""


@dataclass(frozen=True, eq=False)
class YGrid:
    nodes: np.ndarray
    gamma: float

    @property
    def y_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def size(self) -> int:
        return len(self.nodes) - 1


def make_ygrid(y_max: float, m: int = 4000, gamma_: float = 3.0) -> YGrid:
    """Graded nodes ``y_j = y_max (j/m)^gamma``, ``j = 0..m``."""
    if y_max <= 0 or m < 8:
        raise ValueError("need y_max > 0 and at least 8 cells")
    if gamma_ < 1:
        raise ValueError(f"grading exponent must be >= 1, got {gamma_}")
    y = y_max * (np.arange(m + 1) / m) ** gamma_
    y.setflags(write=False)
    return YGrid(y, float(gamma_))


def ygrid_for_basis(basis: EigenBasis, m: int = 4000, gamma_: float = 3.0, height: float = 10.0) -> YGrid:
    """Shared grid of height ``height / sqrt(lambda_1)`` for every mode of ``basis``."""
    return make_ygrid(height / np.sqrt(basis.eigenvalues[0]), m, gamma_)


def _weight_integrals(y, s):
    """Per-cell integrals of ``y^(2s-1)`` and of ``y^(1-2s)`` on ``[0, y]``."""
    return y ** (2 * s) / (2 * s), y ** (2 - 2 * s) / (2 - 2 * s)


def _check_s(s):
    if not 0.0 < s < 1.0:
        raise ValueError(f"extension needs s in (0, 1), got {s}")


def extension_profile(lam: float, s: float, ygrid: YGrid) -> np.ndarray:
    """Decaying profile ``theta`` with ``theta(0) = 1`` sampled on ``ygrid``."""
    return 1.0 + profile_deviation(lam, s, ygrid)


def profile_deviation(lam: float, s: float, ygrid: YGrid) -> np.ndarray:
    """``theta - 1`` for the profile of :func:`extension_profile`.

    Finite-volume scheme: the flux ``y^(1-2s) theta'`` across a cell is
    ``(theta_{j+1} - theta_j) / int y^(2s-1)``, exact for the near-wall
    expansion, and the reaction term is lumped on the dual cells.  The
    unknown is ``theta - 1`` so that the tiny near-wall deviations keep full
    relative precision; the layer fit needs them.
    """
    _check_s(s)
    if lam <= 0:
        raise ValueError("eigenvalue must be positive")
    if ygrid.y_max * np.sqrt(lam) < ADEQUACY:
        raise ValueError(f"truncation height too small: Y*sqrt(lambda) = {ygrid.y_max * np.sqrt(lam):.3g} < {ADEQUACY}")
    y = ygrid.nodes
    m = ygrid.size
    flux_int, mass_int = _weight_integrals(y, s)
    kappa = 1.0 / np.diff(flux_int)
    mid = 0.5 * (y[1:] + y[:-1])
    _, mass_mid = _weight_integrals(mid, s)
    mass = np.diff(mass_mid)  # dual cells of interior nodes 1..m-1
    # unknowns psi_1..psi_{m-1}; psi_0 = 0 and psi_m = -1
    n = m - 1
    ab = np.zeros((3, n))
    ab[0, 1:] = kappa[1:-1]
    ab[1] = -(kappa[:-1] + kappa[1:]) - lam * mass
    ab[2, :-1] = kappa[1:-1]
    rhs = lam * mass
    rhs[-1] += kappa[-1]  # theta(Y) = 0
    psi = solve_banded((1, 1), ab, rhs)
    return np.concatenate(([0.0], psi, [-1.0]))


def fit_layer(deviation: np.ndarray, ygrid: YGrid, s: float, q: int = 6, max_misfit: float = 1e-2) -> float:
    """Least-squares ``c`` in ``theta - 1 ~ -c y^(2s)`` over nodes ``1..q``.

    Residuals are weighted relative to ``c y^(2s)``.  Raises
    :class:`UnresolvedLayerError` when the relative misfit exceeds
    ``max_misfit``.
    """
    y = ygrid.nodes[1:q + 1]
    dev = -deviation[1:q + 1]
    basis = y ** (2 * s)
    w = basis ** -2.0
    c = float(np.sum(w * dev * basis) / np.sum(w * basis**2))
    misfit = float(np.sqrt(np.mean((dev / (c * basis) - 1.0) ** 2))) if c != 0 else np.inf
    if not misfit <= max_misfit:
        raise UnresolvedLayerError(f"near-wall fit misfit {misfit:.3e} exceeds {max_misfit:.1e}")
    return c


@dataclass(frozen=True, eq=False)
class CylinderField:
    """``U(x, y) = sum_i u_i phi_i(x) theta_i(y)`` on a truncated half-cylinder."""

    basis: EigenBasis
    coefficients: np.ndarray
    ygrid: YGrid
    s: float
    deviations: np.ndarray  # theta_i - 1, shape (n_modes, M + 1); zero rows for absent modes

    @property
    def profiles(self) -> np.ndarray:
        return 1.0 + self.deviations

    def trace(self) -> np.ndarray:
        """``U(., 0)``, equal to ``synthesize(u)`` because every profile starts at 1."""
        return synthesize(self.basis, self.coefficients * (1.0 + self.deviations[:, 0]))

    def at_height(self, j: int) -> np.ndarray:
        return synthesize(self.basis, self.coefficients * self.profiles[:, j])


def extend_field(basis: EigenBasis, u, s: float, ygrid: YGrid | None = None) -> CylinderField:
    """Extension of the coefficient vector ``u`` into the cylinder."""
    _check_s(s)
    u = np.asarray(u, dtype=float)
    if u.shape != (basis.n_modes,):
        raise ValueError(f"expected {basis.n_modes} coefficients, got shape {u.shape}")
    ygrid = ygrid or ygrid_for_basis(basis)
    prof = np.zeros((basis.n_modes, ygrid.size + 1))
    for i in np.flatnonzero(u):
        prof[i] = profile_deviation(basis.eigenvalues[i], s, ygrid)
    prof.setflags(write=False)
    return CylinderField(basis, u.copy(), ygrid, float(s), prof)


def extract_flux(U: CylinderField, q: int = 6, max_misfit: float = 1e-2) -> np.ndarray:
    """Coefficients of ``-lim_{y->0} y^(1-2s) dU/dy``, mode by mode via the layer fit."""
    out = np.zeros(U.basis.n_modes)
    for i in np.flatnonzero(U.coefficients):
        c = fit_layer(U.deviations[i], U.ygrid, U.s, q, max_misfit)
        out[i] = 2.0 * U.s * c * U.coefficients[i]
    return out


@dataclass
class Calibration:
    constant: float
    spread: float
    ratios: np.ndarray
    tolerance: float = 0.01

    @property
    def passed(self) -> bool:
        return self.spread <= self.tolerance


def calibrate_cs(basis: EigenBasis, s: float, modes: int = 5, ygrid: YGrid | None = None,
                 tolerance: float = 0.01) -> Calibration:
    """Estimate ``c_s`` as the mean of ``flux_i / lambda_i^s`` over unit single-mode inputs."""
    if modes < 3:
        raise ValueError("calibration needs at least 3 modes")
    if modes > basis.n_modes:
        raise ValueError(f"basis has only {basis.n_modes} modes")
    ygrid = ygrid or ygrid_for_basis(basis)
    ratios = np.empty(modes)
    for i in range(modes):
        e = np.zeros(basis.n_modes)
        e[i] = 1.0
        flux = extract_flux(extend_field(basis, e, s, ygrid))
        ratios[i] = flux[i] / basis.eigenvalues[i] ** s
    c = float(ratios.mean())
    spread = float(np.max(np.abs(ratios / c - 1.0)))
    return Calibration(c, spread, ratios, tolerance)


def cylinder_energy(U: CylinderField) -> float:
    """``sum_i u_i^2 int_0^Y y^(1-2s) (theta_i'^2 + lambda_i theta_i^2) dy``.

    Gradient part per cell as ``(d theta)^2 / int y^(2s-1)``, the flux-form
    quadrature matching the scheme; reaction part by the weighted
    trapezoid rule with exact cell integrals of ``y^(1-2s)``.
    """
    y = U.ygrid.nodes
    flux_int, mass_int = _weight_integrals(y, U.s)
    cell_flux = np.diff(flux_int)
    cell_mass = np.diff(mass_int)
    total = 0.0
    for i in np.flatnonzero(U.coefficients):
        th = 1.0 + U.deviations[i]
        grad = np.sum(np.diff(U.deviations[i]) ** 2 / cell_flux)
        react = U.basis.eigenvalues[i] * np.sum(cell_mass * 0.5 * (th[1:] ** 2 + th[:-1] ** 2))
        total += U.coefficients[i] ** 2 * (grad + react)
    return float(total)


def bessel_profile(lam: float, s: float, y) -> np.ndarray:
    """Closed-form decaying profile ``2^(1-s)/Gamma(s) z^s K_s(z)``, ``z = sqrt(lambda) y``."""
    _check_s(s)
    z = np.sqrt(lam) * np.asarray(y, dtype=float)
    with np.errstate(invalid="ignore"):
        out = 2.0 ** (1 - s) / gamma(s) * z**s * kv(s, z)
    return np.where(z == 0, 1.0, out)


def closed_form_constant(s: float) -> float:
    """``2^(1-2s) Gamma(1-s) / Gamma(s)`` from the small-argument expansion of ``K_s``."""
    _check_s(s)
    return float(2.0 ** (1 - 2 * s) * gamma(1 - s) / gamma(s))
