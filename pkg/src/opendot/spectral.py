"""Eigen-solvers for the transverse, longitudinal, fiber and complex-scaled operators.

Real problems are symmetric tridiagonal (LAPACK ``stebz``/``stein`` through
:func:`scipy.linalg.eigh_tridiagonal`).  The complex-scaled longitudinal
operator is solved densely, then its isolated eigenvalues are re-converged by
shift-invert on finer grids and Richardson-extrapolated in ``h^2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (BudgetExceededError, DegenerateSpectrumError, GridMismatchError,
                     TruncationTooSmallError)
from .grid import Grid, quadrature, second_difference
from .potentials import PotentialModel, check_sector

DEGENERACY_TOL = 1e-9
RAY_TOL = 0.02
BOUND_TOL = 1e-7
DECAY_TOL = 1e-8
DENSE_LIMIT = 4001

BOUND = "bound"
CONTINUUM = "rotated-continuum"
RESONANCE = "resonance-candidate"


@dataclass
class SpectralPair:
    eigenvalue: complex | float
    samples: np.ndarray = field(repr=False)
    index: int
    grid: Grid = field(repr=False)
    residual: float = 0.0


@dataclass
class ComplexSpectrum:
    eigenvalues: np.ndarray
    theta: complex
    classes: list[str]

    def of_class(self, label: str) -> np.ndarray:
        mask = np.array([c == label for c in self.classes], dtype=bool)
        return self.eigenvalues[mask] if mask.size else self.eigenvalues[:0]

    @property
    def bound(self) -> np.ndarray:
        return np.sort_complex(self.of_class(BOUND))

    @property
    def resonances(self) -> np.ndarray:
        return np.sort_complex(self.of_class(RESONANCE))


def _fix_phase(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    if np.iscomplexobj(v):
        return v * (np.abs(v[i]) / v[i])
    return v if v[i] > 0 else -v


def _pairs_from_vectors(grid: Grid, values, vectors, first_index=1) -> list[SpectralPair]:
    pairs = []
    for k, lam in enumerate(values):
        full = np.zeros(grid.n_points, dtype=vectors.dtype)
        full[1:-1] = vectors[:, k] / np.sqrt(grid.h)
        full = _fix_phase(full)
        norm2 = float(np.real(quadrature(grid, np.abs(full) ** 2)))
        full = full / np.sqrt(norm2)
        residual = abs(float(np.real(quadrature(grid, np.abs(full) ** 2))) - 1.0)
        pairs.append(SpectralPair(float(lam), full, first_index + k, grid, residual))
    return pairs


def _check_simple(values, tol=DEGENERACY_TOL) -> None:
    gaps = np.diff(values)
    if gaps.size and np.min(gaps) <= tol:
        k = int(np.argmin(gaps))
        raise DegenerateSpectrumError(
            f"eigenvalues {k + 1} and {k + 2} separated by {gaps[k]:.3e} <= {tol:g}")


def _check_decay(pairs: list[SpectralPair], tol=DECAY_TOL) -> None:
    for pr in pairs:
        edge = max(abs(pr.samples[1]), abs(pr.samples[-2]))
        if edge >= tol:
            raise TruncationTooSmallError(
                f"eigenfunction {pr.index} has |value| {edge:.2e} next to the cut; enlarge L")


def _check_transverse_grid(model: PotentialModel, grid: Grid) -> None:
    a = model.half_width
    if a is not None and not (np.isclose(grid.lo, -a) and np.isclose(grid.hi, a)):
        raise GridMismatchError(f"transverse grid must span S = (-{a}, {a})")


def _lowest_real(grid: Grid, potential: np.ndarray, J: int, check_decay: bool):
    d, e = second_difference(grid).reduced()
    d = d + potential[1:-1]
    if J > d.size:
        raise GridMismatchError(f"{J} eigenpairs requested from {d.size} interior nodes")
    vals, vecs = sla.eigh_tridiagonal(d, e, select="i", select_range=(0, J - 1))
    _check_simple(vals)
    pairs = _pairs_from_vectors(grid, vals, vecs)
    if check_decay:
        _check_decay(pairs)
    return pairs


def solve_transverse(model: PotentialModel, grid: Grid, J: int) -> list[SpectralPair]:
    """First J eigenpairs of ``-d_y^2 + W`` on S."""
    if J < 1:
        raise ValueError("J must be >= 1")
    _check_transverse_grid(model, grid)
    return _lowest_real(grid, model.W(grid.nodes), J, check_decay=not model.is_strip)


def solve_fiber(model: PotentialModel, B: float, p: float, grid: Grid, J: int) -> list[SpectralPair]:
    """First J eigenpairs of ``-d_y^2 + (B y - p)^2 + W``."""
    if J < 1:
        raise ValueError("J must be >= 1")
    _check_transverse_grid(model, grid)
    y = grid.nodes
    return _lowest_real(grid, (B * y - p) ** 2 + model.W(y), J, check_decay=not model.is_strip)


def solve_longitudinal(model: PotentialModel, grid: Grid) -> list[SpectralPair]:
    """All negative eigenpairs of ``-d_x^2 + V`` on the truncated line."""
    Vx = model.V(grid.nodes)
    d, e = second_difference(grid).reduced()
    d = d + Vx[1:-1]
    if np.min(Vx) >= 0:
        return []
    vals, vecs = sla.eigh_tridiagonal(d, e, select="v", select_range=(float(np.min(Vx)) - 1.0, 0.0))
    if vals.size == 0:
        if model.longitudinal.exact_integral() is not None and model.longitudinal.exact_integral() <= 0:
            raise TruncationTooSmallError("no bound state found although V is non-repulsive in the mean")
        return []
    _check_simple(vals)
    pairs = _pairs_from_vectors(grid, vals, vecs)
    _check_decay(pairs)
    return pairs


def scaled_longitudinal_matrix(model: PotentialModel, theta: complex, grid: Grid) -> sp.csc_matrix:
    """Sparse ``-e^{-2 theta} D2 + V(e^theta x)`` on the interior nodes."""
    d, e = second_difference(grid).reduced()
    x = grid.interior
    scale = np.exp(-2 * complex(theta))
    Vt = model.V(np.exp(complex(theta)) * x.astype(complex))
    return sp.diags([scale * e, scale * d + Vt, scale * e], [-1, 0, 1], format="csc")


def nearest_eigenvalue(A, sigma: complex, k: int = 3) -> complex:
    """Eigenvalue of the sparse matrix A closest to sigma (shift-invert Arnoldi)."""
    k = min(k, A.shape[0] - 2)
    vals = spla.eigs(A, k=k, sigma=sigma, which="LM", v0=np.ones(A.shape[0], dtype=complex),
                     return_eigenvectors=False)
    return complex(vals[np.argmin(np.abs(vals - sigma))])


def richardson(coarse: complex, fine: complex) -> complex:
    """Combine values at spacings h and h/2 assuming an h^2 error law."""
    return (4 * fine - coarse) / 3


def _on_ray(z: np.ndarray, theta: complex, tol: float) -> np.ndarray:
    beta = complex(theta).imag
    dev = np.abs(np.angle(z) + 2 * beta)
    return (dev < tol) | (np.abs(z) < 1e-6)


def solve_scaled_longitudinal(model: PotentialModel, theta: complex, grid: Grid, *,
                              ray_tol: float = RAY_TOL, bound_tol: float = BOUND_TOL,
                              refine_factors: tuple[int, int] = (4, 8),
                              box_factor: float = 1.5) -> ComplexSpectrum:
    """Complex spectrum of the dilated longitudinal operator with classification.

    Eigenvalues off the rotated ray are re-solved on a box enlarged by
    ``box_factor`` at the same spacing; those that move are box artifacts of
    the discretized continuum.  Survivors are re-converged on grids refined by
    ``refine_factors`` and Richardson-extrapolated before classification.
    """
    check_sector(model, theta)
    theta = complex(theta)
    if grid.n_points > DENSE_LIMIT:
        raise BudgetExceededError(f"dense complex solve limited to {DENSE_LIMIT} nodes")
    H = scaled_longitudinal_matrix(model, theta, grid).toarray()
    z = np.linalg.eigvals(H)
    order = np.lexsort((z.imag, z.real))
    z = z[order]
    beta = theta.imag
    classes = []
    if beta == 0:
        for val in z:
            classes.append(BOUND if val.real < 0 else CONTINUUM)
        return ComplexSpectrum(z.real.astype(complex), theta, classes)

    ray = _on_ray(z, theta, ray_tol)
    big = Grid(grid.lo * box_factor, grid.hi * box_factor,
               int(round((grid.n_points - 1) * box_factor)) + 1)
    A_big = scaled_longitudinal_matrix(model, theta, big)
    fine = [grid.refined(f) for f in refine_factors]
    A_fine = [scaled_longitudinal_matrix(model, theta, g) for g in fine]
    out = z.copy()
    for i in np.flatnonzero(~ray):
        moved = abs(nearest_eigenvalue(A_big, z[i]) - z[i])
        if moved > 1e-3 * max(1.0, abs(z[i])):
            classes_i = CONTINUUM
        else:
            coarse_val = nearest_eigenvalue(A_fine[0], z[i])
            fine_val = nearest_eigenvalue(A_fine[1], coarse_val)
            out[i] = richardson(coarse_val, fine_val)
            classes_i = _classify_isolated(out[i], beta, bound_tol)
        classes.append((i, classes_i))
    labels = [CONTINUUM] * z.size
    for i, lab in classes:
        labels[i] = lab
    return ComplexSpectrum(out, theta, labels)


def _classify_isolated(val: complex, beta: float, bound_tol: float) -> str:
    if val.real < 0 and abs(val.imag) < bound_tol * max(1.0, abs(val.real)):
        return BOUND
    arg = np.angle(val)
    if val.imag < 0 and -2 * beta < arg < 0:
        return RESONANCE
    return CONTINUUM


def gram_matrix(pairs: list[SpectralPair]) -> np.ndarray:
    grid = pairs[0].grid
    M = np.array([pr.samples for pr in pairs])
    return (M.conj() * grid.weights) @ M.T
