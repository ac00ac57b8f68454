"""Box domains, uniform grids and their analytic Dirichlet eigenbases.

Only tensor-product boxes are supported, because there the Dirichlet
eigenpairs of -Laplacian are known in closed form:

    interval (0, L):   lambda_k = (k pi / L)^2,  phi_k = sqrt(2/L) sin(k pi x / L)

and on a rectangle the products phi_j(x) phi_k(y) with lambda_j + lambda_k.
Functions on the domain have two faces: nodal values on a :class:`Grid`
(shape ``grid.shape``) and eigen-coefficients (length ``basis.n_modes``).
:func:`analyze` and :func:`synthesize` move between them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

#: Minimum number of grid nodes per axis for each unit of the largest
#: per-axis mode index.
NODES_PER_MODE = 4


@dataclass(frozen=True)
class Domain:
    """An open interval ``(0, L)`` or rectangle ``(0, Lx) x (0, Ly)``."""

    kind: str
    lengths: tuple[float, ...]

    def __post_init__(self):
        lengths = tuple(float(v) for v in np.atleast_1d(self.lengths))
        object.__setattr__(self, "lengths", lengths)
        expected = {"interval": 1, "rectangle": 2}
        if self.kind not in expected:
            raise ValueError(f"unknown domain kind {self.kind!r}; use 'interval' or 'rectangle'")
        if len(lengths) != expected[self.kind]:
            raise ValueError(f"{self.kind} needs {expected[self.kind]} length(s), got {len(lengths)}")
        if not all(np.isfinite(v) and v > 0 for v in lengths):
            raise ValueError(f"domain lengths must be positive and finite, got {lengths}")

    @classmethod
    def interval(cls, length: float = np.pi) -> "Domain":
        return cls("interval", (length,))

    @classmethod
    def rectangle(cls, lx: float = np.pi, ly: float = np.pi) -> "Domain":
        return cls("rectangle", (lx, ly))

    @property
    def dim(self) -> int:
        return len(self.lengths)

    @property
    def measure(self) -> float:
        return float(np.prod(self.lengths))


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform tensor grid including boundary nodes, with trapezoid weights."""

    domain: Domain
    axes: tuple[np.ndarray, ...]
    weights: np.ndarray

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(float(a[1] - a[0]) for a in self.axes)

    @property
    def interior(self) -> np.ndarray:
        """Boolean mask of nodes strictly inside the domain."""
        mask = np.ones(self.shape, dtype=bool)
        for d in range(self.domain.dim):
            idx = [slice(None)] * self.domain.dim
            idx[d] = 0
            mask[tuple(idx)] = False
            idx[d] = -1
            mask[tuple(idx)] = False
        return mask

    def coordinates(self) -> list[np.ndarray]:
        """Coordinate arrays of every node, each of shape ``self.shape``."""
        return list(np.meshgrid(*self.axes, indexing="ij"))


def make_grid(domain: Domain, nodes: int | Sequence[int]) -> Grid:
    """Uniform grid with ``nodes`` points per axis, boundary nodes included."""
    counts = [int(nodes)] * domain.dim if np.isscalar(nodes) else [int(n) for n in nodes]
    if len(counts) != domain.dim:
        raise ValueError(f"need {domain.dim} node counts, got {len(counts)}")
    if min(counts) < 3:
        raise ValueError("each axis needs at least 3 nodes")
    axes = tuple(np.linspace(0.0, length, n) for length, n in zip(domain.lengths, counts))
    weights = np.ones(())
    for ax in axes:
        w = np.full(len(ax), ax[1] - ax[0])
        w[0] = w[-1] = 0.5 * (ax[1] - ax[0])
        weights = np.multiply.outer(weights, w)
    for ax in axes:
        ax.setflags(write=False)
    weights.setflags(write=False)
    return Grid(domain, axes, weights)


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """Truncated Dirichlet eigensystem sampled on a grid.

    ``indices[i]`` holds the per-axis wave numbers of mode ``i``;
    ``phi[i]`` its nodal samples.  Modes are sorted by eigenvalue, ties
    broken lexicographically by wave numbers.
    """

    domain: Domain
    grid: Grid
    eigenvalues: np.ndarray
    indices: np.ndarray
    phi: np.ndarray
    _flat: np.ndarray = field(repr=False)
    _flat_weighted: np.ndarray = field(repr=False)

    @property
    def n_modes(self) -> int:
        return len(self.eigenvalues)

    def powers(self, s: float) -> np.ndarray:
        return self.eigenvalues**s


def _axis_modes(length: float, k: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.sqrt(2.0 / length) * np.sin(np.outer(k, x) * np.pi / length)


def build_basis(domain: Domain, n_modes: int, grid: Grid) -> EigenBasis:
    """Analytic eigenpairs of the Dirichlet Laplacian on ``domain``.

    Raises ``ValueError`` when the grid has fewer than
    ``NODES_PER_MODE * k_max`` nodes on some axis, ``k_max`` being the
    largest wave number needed along that axis.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be at least 1")
    if grid.domain != domain:
        raise ValueError("grid was built for a different domain")
    lengths = domain.lengths
    idx = mode_indices(domain, n_modes)
    for d, n in enumerate(grid.shape):
        kmax = int(idx[:, d].max())
        if n < NODES_PER_MODE * kmax:
            raise ValueError(
                f"axis {d}: {n} nodes cannot resolve wave number {kmax} "
                f"(need at least {NODES_PER_MODE * kmax}); refine the grid or use fewer modes"
            )
    lam = sum((idx[:, d] * np.pi / lengths[d]) ** 2 for d in range(domain.dim)).astype(float)
    phi = _axis_modes(lengths[0], idx[:, 0], grid.axes[0])
    if domain.dim == 2:
        phi = phi[:, :, None] * _axis_modes(lengths[1], idx[:, 1], grid.axes[1])[:, None, :]
    # exact zeros on the walls, not sin(pi) ~ 1e-16
    for d in range(domain.dim):
        sl = [slice(None)] * (domain.dim + 1)
        sl[d + 1] = 0
        phi[tuple(sl)] = 0.0
        sl[d + 1] = -1
        phi[tuple(sl)] = 0.0
    flat = np.ascontiguousarray(phi.reshape(n_modes, -1))
    flat_w = flat * grid.weights.ravel()
    for arr in (lam, idx, phi, flat, flat_w):
        arr.setflags(write=False)
    return EigenBasis(domain, grid, lam, idx, phi, flat, flat_w)


def default_basis(domain: Domain, n_modes: int, nodes: int | Sequence[int] | None = None) -> EigenBasis:
    """Basis on the coarsest grid meeting the resolution bound, or on ``nodes``."""
    if nodes is None:
        kmax = mode_indices(domain, n_modes).max(axis=0)
        nodes = [NODES_PER_MODE * int(k) + 1 for k in kmax]
    return build_basis(domain, n_modes, make_grid(domain, nodes))


def mode_indices(domain: Domain, n_modes: int) -> np.ndarray:
    """Wave-number table of the first ``n_modes`` modes, without sampling."""
    if domain.dim == 1:
        return np.arange(1, n_modes + 1)[:, None]
    k = np.arange(1, n_modes + 1)
    jj, kk = (a.ravel() for a in np.meshgrid(k, k, indexing="ij"))
    lam = (jj * np.pi / domain.lengths[0]) ** 2 + (kk * np.pi / domain.lengths[1]) ** 2
    order = np.lexsort((kk, jj, np.round(lam, 9)))[:n_modes]
    return np.column_stack([jj[order], kk[order]])


def _check_nodal(basis: EigenBasis, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != basis.grid.shape:
        raise ValueError(f"field shape {f.shape} does not match grid shape {basis.grid.shape}")
    return f


def analyze(basis: EigenBasis, f: np.ndarray) -> np.ndarray:
    """Eigen-coefficients ``c_i = sum_x w_x f(x) phi_i(x)`` of nodal values ``f``."""
    f = _check_nodal(basis, f)
    return basis._flat_weighted @ f.ravel()


def synthesize(basis: EigenBasis, c: np.ndarray) -> np.ndarray:
    """Nodal values of ``sum_i c_i phi_i``; shorter ``c`` is zero-padded."""
    c = np.asarray(c, dtype=float)
    if c.ndim != 1 or len(c) > basis.n_modes:
        raise ValueError(f"expected at most {basis.n_modes} coefficients, got shape {c.shape}")
    return (c @ basis._flat[: len(c)]).reshape(basis.grid.shape)


def evaluate(basis: EigenBasis, c: np.ndarray, grid: Grid) -> np.ndarray:
    """``sum_i c_i phi_i`` sampled on another grid of the same domain.

    Works per axis, so no ``n_modes x nodes`` table is formed on ``grid``.
    """
    if grid.domain != basis.domain:
        raise ValueError("grid was built for a different domain")
    c = np.asarray(c, dtype=float)
    if c.ndim != 1 or len(c) > basis.n_modes:
        raise ValueError(f"expected at most {basis.n_modes} coefficients, got shape {c.shape}")
    idx = basis.indices[: len(c)]
    tabs = [_axis_modes(L, np.arange(1, int(idx[:, d].max(initial=0)) + 1), grid.axes[d])
            for d, L in enumerate(basis.domain.lengths)]
    if basis.domain.dim == 1:
        out = c @ tabs[0][idx[:, 0] - 1]
    else:
        C = np.zeros((tabs[0].shape[0], tabs[1].shape[0]))
        np.add.at(C, (idx[:, 0] - 1, idx[:, 1] - 1), c)
        out = tabs[0].T @ C @ tabs[1]
    return np.where(grid.interior, out, 0.0)


def orthonormality_error(basis: EigenBasis) -> float:
    """Largest entry of ``|<phi_i, phi_j> - delta_ij|`` under the grid quadrature."""
    gram = basis._flat_weighted @ basis._flat.T
    return float(np.abs(gram - np.eye(basis.n_modes)).max())


def discrete_laplacian(grid: Grid, f: np.ndarray) -> np.ndarray:
    """Second-difference ``-Laplacian`` of nodal values; zero on the boundary."""
    f = np.asarray(f, dtype=float)
    out = np.zeros_like(f)
    inner = tuple(slice(1, -1) for _ in grid.shape)
    for d, h in enumerate(grid.spacing):
        lo = list(inner)
        hi = list(inner)
        lo[d] = slice(0, -2)
        hi[d] = slice(2, None)
        out[inner] += (2.0 * f[inner] - f[tuple(lo)] - f[tuple(hi)]) / h**2
    return out
