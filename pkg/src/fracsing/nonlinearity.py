"""Singular right-hand sides ``g(r) = (eps + r)^-p`` and a generic rule wrapper.

Every rule used by the monotone solver provides ``__call__`` (vectorised
evaluation on nodal values) and ``lipschitz_bound(lower)``, the supremum
of ``|g'|`` on ``[lower, inf)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


class SingularEvaluationError(ValueError):
    """``u^-p`` was requested at a non-positive argument."""


@dataclass(frozen=True)
class SingularRHS:
    """``(eps + max(r, 0))^-p``; ``eps = 0`` is the limit nonlinearity ``r^-p``."""

    p: float
    eps: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {self.p}")
        if not (self.eps >= 0.0 and np.isfinite(self.eps)):
            raise ValueError(f"eps must be finite and non-negative, got {self.eps}")

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.eps == 0.0 and np.any(r <= 0.0):
            raise SingularEvaluationError("r^-p evaluated at r <= 0")
        # negative r is truncation noise of the spectral projection
        out = (self.eps + np.maximum(r, 0.0)) ** (-self.p)
        return out if out.ndim else float(out)

    def lipschitz_bound(self, lower=0.0):
        lower = np.maximum(np.asarray(lower, dtype=float), 0.0)
        if np.any(self.eps + lower <= 0.0):
            raise SingularEvaluationError("g' is unbounded on [0, inf) when eps = 0")
        out = self.p * (self.eps + lower) ** (-(self.p + 1.0))
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class GeneralRHS:
    """User rule ``r -> g(r)`` for ``r > 0``.

    ``derivative_bound(lower)`` is optional; without it the rule cannot be
    used by the monotone solver, only certified by :func:`verify_g1_g2`.
    """

    rule: Callable[[np.ndarray], np.ndarray]
    derivative_bound: Callable[[float], float] | None = field(default=None, compare=False)
    name: str = "g"

    def __call__(self, r):
        return self.rule(r)

    def lipschitz_bound(self, lower=0.0):
        if self.derivative_bound is None:
            raise ValueError(f"rule {self.name!r} declares no derivative bound")
        return self.derivative_bound(lower)


@dataclass(frozen=True)
class ConstantRHS:
    """``g(r) = value``; the linear special case, useful as a harness."""

    value: float

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.full(r.shape, float(self.value))
        return out if out.ndim else float(out)

    def lipschitz_bound(self, lower=0.0):
        return np.zeros(np.shape(lower)) if np.ndim(lower) else 0.0


def eval_g(g: SingularRHS, r):
    return g(r)


def lipschitz_bound(g: SingularRHS, lower=0.0):
    return g.lipschitz_bound(lower)


@dataclass
class G1G2Report:
    """Sampled certification of blow-up at 0 (g1) and monotone decrease (g2)."""

    g1: bool
    g2: bool
    g_small: float
    g_one: float
    margin: float
    violations: list[tuple[float, float]]

    @property
    def passed(self) -> bool:
        return self.g1 and self.g2


def verify_g1_g2(g, samples: int = 200, r_min: float = 1e-12, r_max: float = 1e6,
                 blowup_margin: float = 1e3) -> G1G2Report:
    """Certify (g1) and (g2) for ``g`` on a geometric sample of ``[r_min, r_max]``.

    (g2) fails with every adjacent pair ``(r_a, r_b)``, ``r_a < r_b``, at
    which ``g(r_b) > g(r_a)``.  (g1) requires ``g(r_min) > g(1) + margin``.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    r = np.geomspace(r_min, r_max, samples)
    try:
        vals = np.asarray([float(g(x)) for x in r])
        g_one = float(g(1.0))
    except Exception as exc:  # noqa: BLE001 - surface the failing rule
        raise ValueError(f"evaluation of g failed: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        bad = r[~np.isfinite(vals)][0]
        raise ValueError(f"g is not finite at r = {bad:g}")
    up = np.nonzero(np.diff(vals) > 0)[0]
    violations = [(float(r[i]), float(r[i + 1])) for i in up]
    return G1G2Report(
        g1=bool(vals[0] > g_one + blowup_margin),
        g2=not violations,
        g_small=float(vals[0]),
        g_one=g_one,
        margin=blowup_margin,
        violations=violations,
    )
