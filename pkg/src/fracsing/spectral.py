"""Spectral fractional Laplacian on a truncated Dirichlet eigenbasis.

In eigen-coefficients the operator is diagonal, ``((-L)^s u)_i = lambda_i^s u_i``,
so powers, shifted inverses and the fractional Sobolev norm are all exact
on the truncated space.  Coefficient vectors are plain 1-D arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import EigenBasis, analyze


def check_order(s: float) -> float:
    s = float(s)
    if not 0.0 < s <= 1.0:
        raise ValueError(f"fractional order s must lie in (0, 1], got {s}")
    return s


@dataclass(frozen=True)
class FracExponent:
    """Operator order ``s`` (``s = 1`` is the classical Laplacian) and power ``p``."""

    s: float
    p: float

    def __post_init__(self):
        check_order(self.s)
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"singular power p must lie in (0, 1), got {self.p}")


def _coeffs(basis: EigenBasis, c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.ndim != 1 or len(c) > basis.n_modes:
        raise ValueError(f"expected at most {basis.n_modes} coefficients, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficients must be finite")
    return c


def apply_fractional(basis: EigenBasis, c, s: float) -> np.ndarray:
    """Coefficients of ``(-Laplacian)^s u`` given those of ``u``."""
    c = _coeffs(basis, c)
    return basis.powers(check_order(s))[: len(c)] * c


def solve_shifted(basis: EigenBasis, h, s: float, mu: float = 0.0) -> np.ndarray:
    """Solve ``((-Laplacian)^s + mu) u = h`` in coefficients.

    With ``mu = 0`` this is the unique solution in the truncated space;
    ``lambda_1 > 0`` keeps the diagonal invertible.
    """
    h = _coeffs(basis, h)
    if mu < 0:
        raise ValueError(f"shift mu must be non-negative, got {mu}")
    return h / (basis.powers(check_order(s))[: len(h)] + mu)


def hs_norm(basis: EigenBasis, c, s: float) -> float:
    """``sqrt(sum_i lambda_i^s c_i^2)``, the norm of ``(-Laplacian)^(s/2) u`` in L2."""
    c = _coeffs(basis, c)
    return float(np.sqrt(np.sum(basis.powers(check_order(s))[: len(c)] * c**2)))


def interior_inner(basis: EigenBasis, f) -> np.ndarray:
    """``<f, phi_j>`` for all modes, using interior nodes only.

    Boundary values of ``f`` are ignored, so ``f`` may be infinite there
    (as ``u^-p`` is for the singular problem).  Because every ``phi_j``
    vanishes on the walls, the end cells of the composite trapezoid rule
    reduce to the one-sided value at the first interior node and the
    result coincides with :func:`analyze` whenever ``f`` is finite.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != basis.grid.shape:
        raise ValueError(f"field shape {f.shape} does not match grid shape {basis.grid.shape}")
    interior = basis.grid.interior
    if not np.all(np.isfinite(f[interior])):
        raise ValueError("right-hand side is not finite at an interior quadrature node")
    return analyze(basis, np.where(interior, f, 0.0))


def weak_residual(basis: EigenBasis, u, rhs, s: float, m: int) -> np.ndarray:
    """Weak-form defect of ``(-Laplacian)^s u = rhs`` tested with ``phi_1..phi_m``.

    Entry ``j`` is ``lambda_j^s u_j - <rhs, phi_j>``, the difference of the
    two sides of the weak formulation with test function ``phi_j``.
    """
    if not 1 <= m <= basis.n_modes:
        raise ValueError(f"test-mode count must lie in [1, {basis.n_modes}], got {m}")
    lhs = apply_fractional(basis, analyze(basis, u)[:m], s)
    return lhs - interior_inner(basis, rhs)[:m]
