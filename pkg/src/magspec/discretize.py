"""Gauge-covariant (Peierls-phase) finite differences on a uniform grid.

The operator is assembled as a generalized Hermitian pencil (H, M): H carries
the flat 5-point stencil with unit-modulus hopping phases and the optional
scalar potential; the diagonal mass M carries the conformal area weight
e^{2 phi} dx dy.  Eigenvalue problem downstream: H u = lambda M u.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import DomainError
from .fieldgeom import Rectangle

__all__ = [
    "Grid",
    "GridFunction",
    "AssembledOperator",
    "assemble",
    "apply_operator",
    "magnetic_form",
    "field_mass",
    "dump_matrix_market",
]


@dataclass(frozen=True)
class Grid:
    """Interior nodes of a uniform grid on a rectangle, Dirichlet boundary."""

    domain: Rectangle
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise DomainError("grid must have at least 8 interior points per axis")

    @property
    def dx(self):
        return self.domain.width / (self.nx + 1)

    @property
    def dy(self):
        return self.domain.height / (self.ny + 1)

    @property
    def size(self):
        return self.nx * self.ny

    @property
    def xs(self):
        return self.domain.x_min + self.dx * np.arange(1, self.nx + 1)

    @property
    def ys(self):
        return self.domain.y_min + self.dy * np.arange(1, self.ny + 1)

    def meshgrid(self):
        return np.meshgrid(self.xs, self.ys, indexing="ij")

    def flatten_xy(self, values2d):
        """(nx, ny) array -> flat vector, x-major."""
        return np.asarray(values2d).reshape(self.size)

    def to_2d(self, flat):
        return np.asarray(flat).reshape(self.nx, self.ny)


@dataclass
class GridFunction:
    """Complex-valued function sampled on the interior nodes of a grid."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).reshape(-1)
        if v.size != self.grid.size:
            raise DomainError(f"vector length {v.size} does not match grid size {self.grid.size}")
        if not np.all(np.isfinite(v)):
            raise DomainError("grid function has non-finite entries")
        self.values = v


@dataclass
class AssembledOperator:
    """Sparse Hermitian stiffness H plus diagonal mass M for the pencil (H, M)."""

    H: sp.csr_matrix
    M: np.ndarray  # diagonal entries
    grid: Grid
    h: float
    setup: object = None

    @property
    def dim(self):
        return self.grid.size


def assemble(setup, gauge, grid: Grid, h: float, potential=None) -> AssembledOperator:
    """Assemble the Peierls-phase discretization of the magnetic operator.

    `setup` must provide mass_weight(x, y) and B(x, y); `gauge` provides the
    exact y-edge integrals of A2 (A1 = 0).  `potential` is an optional scalar
    function added as V(x, y) * M on the diagonal.
    """
    if h <= 0:
        raise DomainError(f"h must be positive, got {h}")
    dx, dy = grid.dx, grid.dy
    if h / dx ** 2 > 1e150 or h / dy ** 2 > 1e150:
        raise DomainError("h / dx^2 overflow guard tripped")
    xs, ys = grid.xs, grid.ys
    nx, ny = grid.nx, grid.ny
    w = dx * dy
    cx = h * h / dx ** 2 * w
    cy = h * h / dy ** 2 * w

    X, Y = grid.meshgrid()
    mass = np.broadcast_to(setup.mass_weight(X, Y), X.shape) * w  # (nx, ny)

    # Peierls phases on y-edges between interior nodes: theta[i, j] for the
    # edge (i, j) -> (i, j+1); x-edges carry phases only for transformed
    # gauges with A1 != 0 (the native gauge has A1 = 0).
    edge_int = gauge.y_edge_integrals(xs, ys)  # (nx, ny-1)
    theta = -edge_int / h
    x_edge = getattr(gauge, "x_edge_integrals", None)
    theta_x = None if x_edge is None else -x_edge(xs, ys) / h  # (nx-1, ny)

    # aliasing guard: plaquette flux should stay below pi
    Bmax = float(np.abs(setup.B(X, Y)).max())
    if Bmax * dx * dy / h > np.pi:
        warnings.warn("flux per plaquette exceeds pi -- refine grid")

    idx = np.arange(grid.size).reshape(nx, ny)

    rows = []
    cols = []
    vals = []

    # diagonal: each interior node sees 4 incident edges (Dirichlet outside)
    diag = np.full((nx, ny), 2 * cx + 2 * cy, dtype=complex)
    if potential is not None:
        diag += np.asarray(potential(X, Y), dtype=float) * mass
    rows.append(idx.ravel())
    cols.append(idx.ravel())
    vals.append(diag.ravel())

    # x-hoppings
    p = idx[:-1, :].ravel()
    q = idx[1:, :].ravel()
    if theta_x is None:
        hop = np.full(p.size, -cx, dtype=complex)
    else:
        hop = -cx * np.exp(1j * theta_x.ravel())
    rows.extend([q, p])
    cols.extend([p, q])
    vals.extend([hop, hop.conj()])

    # y-hoppings with Peierls phase
    p = idx[:, :-1].ravel()
    q = idx[:, 1:].ravel()
    hop = -cy * np.exp(1j * theta.ravel())
    rows.extend([q, p])
    cols.extend([p, q])
    vals.extend([hop, hop.conj()])

    H = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(grid.size, grid.size),
    ).tocsr()
    return AssembledOperator(H=H, M=mass.reshape(-1), grid=grid, h=h, setup=setup)


def apply_operator(op: AssembledOperator, u: GridFunction) -> GridFunction:
    if u.grid is not op.grid and u.grid != op.grid:
        raise DomainError("grid mismatch")
    return GridFunction(op.H @ u.values, op.grid)


def magnetic_form(op: AssembledOperator, u) -> float:
    """<u, H u>: the discrete magnetic Dirichlet form (assemble without potential)."""
    v = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=complex)
    if v.size != op.dim:
        raise DomainError("dimension mismatch")
    return float(np.real(np.vdot(v, op.H @ v)))


def field_mass(setup, grid: Grid, u) -> float:
    """Discrete integral of b |u|^2 over the Riemannian area element."""
    v = u.values if isinstance(u, GridFunction) else np.asarray(u, dtype=complex)
    if v.size != grid.size:
        raise DomainError("dimension mismatch")
    X, Y = grid.meshgrid()
    bvals = np.broadcast_to(np.asarray(setup.b(X, Y), dtype=float), X.shape).reshape(-1)
    mass = (setup.mass_weight(X, Y) * grid.dx * grid.dy).reshape(-1)
    return float(np.sum(bvals * np.abs(v) ** 2 * mass))


def dump_matrix_market(op: AssembledOperator, path) -> None:
    """Write H in Matrix Market coordinate format (complex Hermitian, 1-based)."""
    scipy.io.mmwrite(path, op.H.tocoo(), symmetry="hermitian")
