"""Transverse-mode decomposition: moments, dot projections, channel operator."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ChannelCountError, GridMismatchError
from .grid import Grid, second_difference
from .potentials import PotentialModel, check_sector
from .spectral import SpectralPair


@dataclass
class ModeCouplings:
    m1: np.ndarray
    m2: np.ndarray
    U: np.ndarray = field(repr=False)  # (J, J, n_x) on the longitudinal grid, theta = 0
    x_grid: Grid | None = field(default=None, repr=False)


def _mode_matrix(modes: list[SpectralPair]) -> tuple[np.ndarray, Grid]:
    grid = modes[0].grid
    for m in modes[1:]:
        if not m.grid.same_as(grid):
            raise GridMismatchError("modes come from different transverse grids")
    return np.array([m.samples for m in modes]), grid


def transverse_moments(modes: list[SpectralPair], r: int) -> np.ndarray:
    """``m_jk = int_S y^r conj(chi_j) chi_k dy``."""
    if r not in (1, 2):
        raise ValueError("r must be 1 or 2")
    X, grid = _mode_matrix(modes)
    w = grid.weights * grid.nodes ** r
    return (X.conj() * w) @ X.T


def transverse_profile_matrix(modes: list[SpectralPair], g) -> np.ndarray:
    """``<chi_j, g chi_k>`` for a function g of y."""
    X, grid = _mode_matrix(modes)
    w = grid.weights * np.broadcast_to(np.asarray(g(grid.nodes), dtype=float), grid.nodes.shape)
    return (X.conj() * w) @ X.T


def _dot_terms(model: PotentialModel):
    """U(x, y) as a sum of products ``coef * fx(x) * gy(y)``."""
    dot = model.dot
    one = lambda t: np.ones_like(np.asarray(t, dtype=float))  # noqa: E731
    if dot.family == "none":
        return []
    if dot.family == "gaussian_x":
        return [(-dot.amplitude, dot.x_factor, one)]
    if dot.family == "separable":
        gy = lambda y: np.exp(-((np.asarray(y) - dot.y_center) / dot.y_width) ** 2)  # noqa: E731
        return [(-dot.amplitude, dot.x_factor, one),
                (-dot.y_amplitude, lambda x: np.ones_like(np.asarray(x)), gy)]
    return [(-dot.amplitude, dot.x_factor, dot.y_factor)]


def dot_projections(model: PotentialModel, modes: list[SpectralPair], x_grid: Grid,
                    theta: complex = 0.0, interior: bool = False) -> np.ndarray:
    """``U_jk(e^theta x) = int_S U(e^theta x, y) conj(chi_j) chi_k dy`` sampled on x_grid."""
    x = x_grid.interior if interior else x_grid.nodes
    J = len(modes)
    theta = complex(theta)
    z = np.exp(theta) * x if theta != 0 else x
    out = np.zeros((J, J, x.size), dtype=complex if theta != 0 else float)
    for coef, fx, gy in _dot_terms(model):
        P = transverse_profile_matrix(modes, gy)
        if np.isrealobj(out):
            P = P.real
        out = out + coef * P[:, :, None] * fx(z)[None, None, :]
    return out


def mode_couplings(model: PotentialModel, modes: list[SpectralPair], x_grid: Grid) -> ModeCouplings:
    return ModeCouplings(
        m1=transverse_moments(modes, 1),
        m2=transverse_moments(modes, 2),
        U=dot_projections(model, modes, x_grid),
        x_grid=x_grid,
    )


def first_difference_matrix(n: int, h: float) -> sp.csc_matrix:
    """Centered (antisymmetric) d/dx on n interior nodes with zero boundary values."""
    off = np.full(n - 1, 1.0 / (2 * h))
    return sp.diags([-off, off], [-1, 1], format="csc")


@dataclass
class ChannelOperator:
    """Truncated matrix operator ``{H_jk(theta, B, lam)}`` on the longitudinal grid.

    Unknowns are ordered channel by channel over the interior nodes.
    """
    model: PotentialModel = field(repr=False)
    modes: list[SpectralPair] = field(repr=False)
    theta: complex
    B: float
    lam: float
    K: int
    grid: Grid = field(repr=False)
    matrix: sp.csc_matrix = field(repr=False)

    @property
    def thresholds(self) -> np.ndarray:
        return np.array([m.eigenvalue for m in self.modes[: self.K]], dtype=float)

    @property
    def n_nodes(self) -> int:
        return self.grid.n_points - 2

    def block(self, j: int, k: int) -> sp.csc_matrix:
        """Block (j, k) with 1-based channel indices."""
        n = self.n_nodes
        return self.matrix[(j - 1) * n: j * n, (k - 1) * n: k * n]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def with_grid(self, grid: Grid) -> "ChannelOperator":
        return assemble_channel_operator(self.model, self.theta, self.B, self.lam, self.K,
                                         grid, self.modes)


def assemble_channel_operator(model: PotentialModel, theta: complex, B: float, lam: float,
                              K: int, grid: Grid, modes: list[SpectralPair]) -> ChannelOperator:
    """Blocks ``(-e^{-2t} d^2 + V(e^t x) + nu_j) delta_jk + 2iB e^{-t} m1_jk d_x + B^2 m2_jk
    + lam U_jk(e^t x)``."""
    check_sector(model, theta)
    if K > len(modes):
        raise ChannelCountError(f"K = {K} exceeds the {len(modes)} solved transverse modes")
    if K < 1:
        raise ChannelCountError("K must be >= 1")
    theta = complex(theta)
    modes = modes[:K]
    m1 = transverse_moments(modes, 1)
    m2 = transverse_moments(modes, 2)
    d, e = second_difference(grid).reduced()
    n = d.size
    x = grid.interior
    scale = np.exp(-2 * theta)
    Vt = model.V(np.exp(theta) * x.astype(complex)) if theta != 0 else model.V(x)
    kinetic = sp.diags([scale * e, scale * d, scale * e], [-1, 0, 1], format="csc")
    D1 = first_difference_matrix(n, grid.h)
    eye = sp.identity(n, format="csc")
    Ujk = None
    if lam != 0 and not model.dot.is_zero:
        Ujk = dot_projections(model, modes, grid, theta, interior=True)
    blocks = [[None] * K for _ in range(K)]
    for j in range(K):
        for k in range(K):
            blk = None
            if B != 0:
                coupling = 2j * B * np.exp(-theta) * m1[j, k]
                if abs(m1[j, k]) > 0:
                    blk = coupling * D1
                if m2[j, k] != 0:
                    blk = B ** 2 * m2[j, k] * eye if blk is None else blk + B ** 2 * m2[j, k] * eye
            if Ujk is not None:
                term = sp.diags(lam * Ujk[j, k], 0, format="csc")
                blk = term if blk is None else blk + term
            if j == k:
                diag = kinetic + sp.diags(Vt + modes[j].eigenvalue, 0, format="csc")
                blk = diag if blk is None else blk + diag
            blocks[j][k] = blk if blk is not None else sp.csc_matrix((n, n))
    H = sp.bmat(blocks, format="csc").astype(complex)
    return ChannelOperator(model, list(modes), theta, float(B), float(lam), K, grid, H)
