"""Uniform 1D grids, three-point Laplacians and trapezoid quadrature."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidBoundsError, LengthMismatchError, TooFewPointsError

DIRICHLET = "dirichlet"
TRUNCATED_LINE = "truncated-line"
_BOUNDARY_TAGS = (DIRICHLET, TRUNCATED_LINE)


@dataclass(frozen=True)
class Grid:
    lo: float
    hi: float
    n_points: int
    h: float = field(init=False)
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InvalidBoundsError(f"need lo < hi, got lo={self.lo}, hi={self.hi}")
        if self.n_points < 3:
            raise TooFewPointsError(f"need at least 3 points, got {self.n_points}")
        object.__setattr__(self, "h", (self.hi - self.lo) / (self.n_points - 1))
        nodes = np.linspace(self.lo, self.hi, self.n_points)
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    @property
    def weights(self) -> np.ndarray:
        """Composite trapezoid weights."""
        w = np.full(self.n_points, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    def refined(self, factor: int = 2) -> "Grid":
        """Same interval with the spacing divided by ``factor`` (nested nodes)."""
        return Grid(self.lo, self.hi, (self.n_points - 1) * factor + 1)

    def coarsened(self) -> "Grid":
        """Same interval with twice the spacing; requires an even interval count."""
        if (self.n_points - 1) % 2:
            raise TooFewPointsError("coarsening needs an even number of intervals")
        return Grid(self.lo, self.hi, (self.n_points - 1) // 2 + 1)

    def same_as(self, other: "Grid") -> bool:
        return (self.n_points == other.n_points and np.isclose(self.lo, other.lo)
                and np.isclose(self.hi, other.hi))


@dataclass(frozen=True)
class TridiagonalOperator:
    """Symmetric tridiagonal matrix on all grid nodes.

    Boundary rows are decoupled (zero off-diagonal) so that the interior block
    is the Dirichlet-reduced operator.
    """
    diagonal: np.ndarray
    off_diagonal: np.ndarray
    boundary: str
    h: float

    def __post_init__(self):
        if self.boundary not in _BOUNDARY_TAGS:
            raise ValueError(f"unknown boundary tag {self.boundary!r}")
        if len(self.off_diagonal) != len(self.diagonal) - 1:
            raise LengthMismatchError("off-diagonal must have n_points - 1 entries")

    def reduced(self) -> tuple[np.ndarray, np.ndarray]:
        """Diagonal and off-diagonal of the interior (Dirichlet) block."""
        return self.diagonal[1:-1].copy(), self.off_diagonal[1:-1].copy()

    def dense(self) -> np.ndarray:
        return (np.diag(self.diagonal) + np.diag(self.off_diagonal, 1)
                + np.diag(self.off_diagonal, -1))


def build_uniform_grid(lo: float, hi: float, n: int) -> Grid:
    return Grid(float(lo), float(hi), int(n))


def second_difference(grid: Grid, bc: str = DIRICHLET) -> TridiagonalOperator:
    """Three-point stencil for -d^2/dx^2 with zero boundary values."""
    h2 = grid.h ** 2
    diag = np.full(grid.n_points, 2.0 / h2)
    off = np.full(grid.n_points - 1, -1.0 / h2)
    off[0] = off[-1] = 0.0
    return TridiagonalOperator(diag, off, bc, grid.h)


def first_difference(values: np.ndarray, h: float) -> np.ndarray:
    """Centered first derivative with zero boundary values outside the grid."""
    out = np.zeros_like(values)
    out[1:-1] = (values[2:] - values[:-2]) / (2 * h)
    out[0] = values[1] / (2 * h)
    out[-1] = -values[-2] / (2 * h)
    return out


def quadrature(grid: Grid, samples) -> complex | float:
    samples = np.asarray(samples)
    if samples.shape[-1] != grid.n_points:
        raise LengthMismatchError(
            f"expected {grid.n_points} samples, got {samples.shape[-1]}")
    return samples @ grid.weights
