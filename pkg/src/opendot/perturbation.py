"""Embedded levels and their low-order perturbation coefficients.

For an unperturbed level ``e0 = mu_n + nu_j`` the symmetry-breaking term in
channel space is

    U_jk(B, lam) = 2iB m1_jk d_x + B^2 m2_jk + lam U_jk(x).

``e1`` is the diagonal expectation value.  ``e2`` is minus the reduced
resolvent quadratic form summed over channels; its imaginary part (the width)
only involves open channels ``k <= k_open`` and is evaluated with the wave
operator and the on-shell Fourier trace.

Everything here is linear in the three basis functions ``phi'``, ``phi`` and
``U_jk phi``, so per-level amplitudes and Gram matrices are cached and any
``(B, lam)`` is then a cheap contraction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import CubicSpline

from .coupling import ModeCouplings, mode_couplings
from .errors import (DegenerateLevelError, ExtrapolationFailureError, NearThresholdError,
                     NotEmbeddedError, SingularSystemError, ThresholdCollisionError)
from .grid import Grid, first_difference, quadrature, second_difference
from .potentials import PotentialModel
from .spectral import SpectralPair, solve_longitudinal, solve_transverse

ISOLATED = "isolated"
EMBEDDED = "embedded"
THRESHOLD = "threshold-collision"
DEGENERATE = "degenerate"

NEAR_THRESHOLD = 1e-4
GROUP_VELOCITY_TOL = 1e-10


@dataclass(frozen=True)
class LevelRecord:
    n: int
    j: int
    e0: float
    status: str
    k_open: int

    @property
    def label(self) -> str:
        return f"n{self.n}j{self.j}"


def classify_levels(mu, nu, energy_cap: float = np.inf, threshold_tol: float = 1e-6,
                    degeneracy_tol: float = 1e-9) -> list[LevelRecord]:
    """Census of ``mu_n + nu_j`` below ``energy_cap``, ordered by energy."""
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.size == 0 or nu.size == 0:
        return []
    e = mu[:, None] + nu[None, :]
    records = []
    for n in range(mu.size):
        for j in range(nu.size):
            e0 = float(e[n, j])
            if e0 > energy_cap:
                continue
            others = np.delete(e.ravel(), n * nu.size + j)
            if others.size and np.min(np.abs(others - e0)) < degeneracy_tol:
                status = DEGENERATE
            elif np.min(np.abs(nu - e0)) < threshold_tol:
                status = THRESHOLD
            elif e0 > nu[0]:
                status = EMBEDDED
            else:
                status = ISOLATED
            k_open = int(np.count_nonzero(e0 - nu > 0))
            records.append(LevelRecord(n + 1, j + 1, e0, status, k_open))
    records.sort(key=lambda r: (r.e0, r.n, r.j))
    return records


def trace_amplitude(grid: Grid, phi, E: float, sigma: int) -> complex:
    """``phi^(sigma sqrt(E))`` with ``phi^(k) = (2 pi)^{-1/2} int e^{-ikx} phi(x) dx``."""
    k = sigma * np.sqrt(E)
    return complex(quadrature(grid, np.exp(-1j * k * grid.nodes) * np.asarray(phi))) / np.sqrt(2 * np.pi)


def free_outgoing_resolvent(grid: Grid, f: np.ndarray, E: float) -> np.ndarray:
    """``(-d^2 - E - i0)^{-1} f`` with kernel ``(i / 2k) exp(ik|x - x'|)``.

    Evaluated in O(n) by splitting the integral at x; each half is a
    cumulative trapezoid sum.
    """
    k = np.sqrt(E)
    x = grid.nodes
    f = np.asarray(f, dtype=complex)
    fx = f if f.ndim == 2 else f[:, None]
    em = np.exp(-1j * k * x)[:, None]
    ep = np.exp(1j * k * x)[:, None]
    a = em * fx
    b = ep * fx
    h = grid.h
    left = np.zeros_like(a)
    left[1:] = np.cumsum(0.5 * h * (a[1:] + a[:-1]), axis=0)
    right = np.zeros_like(b)
    right[:-1] = np.cumsum((0.5 * h * (b[1:] + b[:-1]))[::-1], axis=0)[::-1]
    out = (1j / (2 * k)) * (ep * left + em * right)
    return out if f.ndim == 2 else out[:, 0]


def wave_operator_apply(V, grid: Grid, E: float, f, *, cutoff: float = 1e-12,
                        near_threshold: float = NEAR_THRESHOLD, max_nodes: int = 4001,
                        rcond_min: float = 1e-13) -> np.ndarray:
    """``omega(E + i0) f`` for the potential samples V on ``grid``.

    ``omega = (1 + V R0)^{-1}`` is written through the symmetric
    Birman-Schwinger factorization ``V = |V|^{1/2} sgn(V) |V|^{1/2}``:

        omega f = f - |V|^{1/2} (1 + sgnV |V|^{1/2} R0 |V|^{1/2})^{-1} sgnV |V|^{1/2} R0 f,

    and the bracket is a second-kind integral equation on the support window
    of V, solved by Nystrom discretization with trapezoid weights.  Windows
    larger than ``max_nodes`` are subsampled with a uniform stride and the
    solution is spline-interpolated back.
    """
    if E < near_threshold:
        raise NearThresholdError(f"E = {E:.3e} below the near-threshold guard {near_threshold:g}")
    V = np.asarray(V, dtype=float)
    f = np.asarray(f, dtype=complex)
    vmax = np.max(np.abs(V)) if V.size else 0.0
    if vmax == 0:
        return f.copy()
    win = np.flatnonzero(np.abs(V) > cutoff * vmax)
    i0, i1 = win[0], win[-1]
    stride = max(1, int(np.ceil((i1 - i0 + 1) / max_nodes)))
    idx = np.arange(i0, i1 + 1, stride)
    if idx[-1] != i1:
        idx = np.append(idx, i1)
    xs = grid.nodes[idx]
    ws = np.zeros(idx.size)
    dx = np.diff(xs)
    ws[:-1] += 0.5 * dx
    ws[1:] += 0.5 * dx
    k = np.sqrt(E)
    vs = np.sqrt(np.abs(V[idx]))
    us = np.sign(V[idx]) * vs
    G = (1j / (2 * k)) * np.exp(1j * k * np.abs(xs[:, None] - xs[None, :]))
    M = np.eye(idx.size, dtype=complex) + us[:, None] * G * (ws * vs)[None, :]
    rhs = free_outgoing_resolvent(grid, f, E)[idx]
    rhs = us[:, None] * rhs if rhs.ndim == 2 else us * rhs
    lu, piv = sla.lu_factor(M, check_finite=False)
    anorm = np.max(np.sum(np.abs(M), axis=0))
    rcond, _ = sla.lapack.zgecon(lu, anorm)
    if rcond < rcond_min:
        raise SingularSystemError(f"Nystrom matrix reciprocal condition {rcond:.2e} at E = {E:g}")
    s = sla.lu_solve((lu, piv), rhs, check_finite=False)
    vsol = vs[:, None] * s if s.ndim == 2 else vs * s
    full = np.zeros_like(f)
    sl = slice(i0, i1 + 1)
    if stride == 1:
        full[sl] = vsol
    else:
        full[sl] = CubicSpline(xs, vsol, axis=0)(grid.nodes[sl])
    return f - full


@dataclass
class GoldenRuleResult:
    total: float
    per_channel: np.ndarray
    per_sigma: dict = field(default_factory=dict)


@dataclass
class ResonanceEstimate:
    level: LevelRecord
    B: float
    lam: float
    e1: float
    e2: complex
    im_e2_by_channel: np.ndarray = field(repr=False)
    im_e2_resolvent: float = float("nan")

    @property
    def predicted_pole(self) -> complex:
        return self.level.e0 + self.e1 + self.e2


@dataclass
class ResonanceProblem:
    """Unperturbed data shared by all perturbative computations for one model."""
    model: PotentialModel = field(repr=False)
    x_grid: Grid = field(repr=False)
    modes: list[SpectralPair] = field(repr=False)
    longitudinal: list[SpectralPair] = field(repr=False)
    couplings: ModeCouplings = field(repr=False)
    nystrom_max_nodes: int = 4001
    near_threshold: float = NEAR_THRESHOLD
    _amp_cache: dict = field(default_factory=dict, repr=False)
    _gram_cache: dict = field(default_factory=dict, repr=False)

    @property
    def mu(self) -> np.ndarray:
        return np.array([p.eigenvalue for p in self.longitudinal])

    @property
    def nu(self) -> np.ndarray:
        return np.array([m.eigenvalue for m in self.modes])

    @cached_property
    def V(self) -> np.ndarray:
        return self.model.V(self.x_grid.nodes)

    def levels(self, energy_cap: float = np.inf, threshold_tol: float = 1e-6) -> list[LevelRecord]:
        return classify_levels(self.mu, self.nu, energy_cap, threshold_tol)

    def phi(self, n: int) -> np.ndarray:
        return self.longitudinal[n - 1].samples

    def dphi(self, n: int) -> np.ndarray:
        return first_difference(self.phi(n), self.x_grid.h)

    def basis(self, level: LevelRecord, k: int) -> np.ndarray:
        """Columns ``phi'``, ``phi``, ``U_jk phi`` (coupling coefficients stripped)."""
        phi = self.phi(level.n)
        cols = [self.dphi(level.n), phi, self.couplings.U[level.j - 1, k - 1] * phi]
        return np.array(cols, dtype=complex).T

    def coefficients(self, level: LevelRecord, k: int, B: float, lam: float) -> np.ndarray:
        j = level.j - 1
        c = self.couplings
        return np.array([2j * B * c.m1[j, k - 1], B ** 2 * c.m2[j, k - 1], lam], dtype=complex)

    def coupled(self, level: LevelRecord, k: int, B: float, lam: float) -> np.ndarray:
        """``U_jk(B, lam) phi_n`` sampled on the longitudinal grid."""
        return self.basis(level, k) @ self.coefficients(level, k, B, lam)

    def trace_amplitudes(self, level: LevelRecord, k: int) -> np.ndarray:
        """``tau^sigma omega(E_k + i0)`` of each basis column; shape (2, 3), rows sigma = +, -."""
        key = (level.n, level.j, k)
        if key not in self._amp_cache:
            E = level.e0 - self.nu[k - 1]
            g = wave_operator_apply(self.V, self.x_grid, E, self.basis(level, k),
                                    near_threshold=self.near_threshold,
                                    max_nodes=self.nystrom_max_nodes)
            amps = np.array([[trace_amplitude(self.x_grid, g[:, b], E, s) for b in range(3)]
                             for s in (1, -1)])
            self._amp_cache[key] = amps
        return self._amp_cache[key]


def prepare_problem(model: PotentialModel, x_grid: Grid, y_grid: Grid, J: int,
                    nystrom_max_nodes: int = 4001) -> ResonanceProblem:
    modes = solve_transverse(model, y_grid, J)
    longitudinal = solve_longitudinal(model, x_grid)
    return ResonanceProblem(model, x_grid, modes, longitudinal,
                            mode_couplings(model, modes, x_grid), nystrom_max_nodes)


def _check_level(level: LevelRecord, problem: ResonanceProblem, require_embedded: bool = False):
    if level.status == DEGENERATE:
        raise DegenerateLevelError(f"level {level.label} is degenerate")
    if level.status == THRESHOLD:
        raise ThresholdCollisionError(f"level {level.label} sits on a threshold")
    if require_embedded and level.status != EMBEDDED:
        raise NotEmbeddedError(f"level {level.label} is {level.status}")
    for k in range(1, level.k_open + 1):
        E = level.e0 - problem.nu[k - 1]
        if E < problem.near_threshold:
            raise NearThresholdError(f"channel {k}: e0 - nu_k = {E:.3e} too close to threshold")


def first_order_shift(problem: ResonanceProblem, level: LevelRecord, B: float, lam: float) -> float:
    """``e1 = B^2 m2_jj + lam <phi_n, U_jj phi_n>``.

    The term ``2iB m1_jj (phi_n, phi_n')`` is checked to vanish and dropped.
    """
    if level.status == DEGENERATE:
        raise DegenerateLevelError(f"level {level.label} is degenerate")
    j = level.j - 1
    c = problem.couplings
    phi = problem.phi(level.n)
    grid = problem.x_grid
    cross = 2j * B * c.m1[j, j] * quadrature(grid, phi * problem.dphi(level.n))
    if abs(cross) >= GROUP_VELOCITY_TOL:
        raise AssertionError(f"group-velocity term {abs(cross):.2e} does not vanish")
    potential = float(quadrature(grid, c.U[j, j] * phi ** 2)) if lam != 0 else 0.0
    return float(B ** 2 * c.m2[j, j].real + lam * potential)


def golden_rule_width(problem: ResonanceProblem, level: LevelRecord, B: float, lam: float,
                      require_embedded: bool = False) -> GoldenRuleResult:
    """Imaginary part of e2 from the on-shell quadratic form.

    ``Im e2 = -sum_{k <= k_open} sum_sigma pi / (2 sqrt(E_k))
    |tau^sigma_{E_k} omega(E_k + i0) U_jk(B, lam) phi_n|^2`` with ``E_k = e0 - nu_k``.
    """
    _check_level(level, problem, require_embedded)
    K = len(problem.modes)
    per_channel = np.zeros(K)
    per_sigma = {}
    for k in range(1, level.k_open + 1):
        E = level.e0 - problem.nu[k - 1]
        amps = problem.trace_amplitudes(level, k) @ problem.coefficients(level, k, B, lam)
        pref = np.pi / (2 * np.sqrt(E))
        for s, a in zip((1, -1), amps):
            per_sigma[(k, s)] = -pref * abs(a) ** 2
        per_channel[k - 1] = per_sigma[(k, 1)] + per_sigma[(k, -1)]
    return GoldenRuleResult(float(per_channel.sum()), per_channel, per_sigma)


def _banded(diag: np.ndarray, off: np.ndarray) -> np.ndarray:
    ab = np.zeros((3, diag.size), dtype=np.result_type(diag, off))
    ab[0, 1:] = off
    ab[1] = diag
    ab[2, :-1] = off
    return ab


def _closed_gram(problem: ResonanceProblem, F: np.ndarray, E: float) -> np.ndarray:
    """``<f_a, (h^V - E)^{-1} f_b>`` for E below the continuum."""
    grid = problem.x_grid
    d, e = second_difference(grid).reduced()
    Y = sla.solve_banded((1, 1), _banded(d + problem.V[1:-1] - E, e), F[1:-1])
    return grid.h * F[1:-1].conj().T @ Y


def _reduced_gram(problem: ResonanceProblem, F: np.ndarray, n: int) -> np.ndarray:
    """Reduced resolvent of h^V at mu_n: bordered system enforcing orthogonality to phi_n."""
    grid = problem.x_grid
    phi = problem.phi(n)[1:-1]
    mu = problem.mu[n - 1]
    d, e = second_difference(grid).reduced()
    m = d.size
    h = grid.h
    A = sp.diags([e, d + problem.V[1:-1] - mu, e], [-1, 0, 1], format="csc")
    col = sp.csc_matrix((h * phi)[:, None])
    bordered = sp.bmat([[A, col], [col.T, None]], format="csc")
    Fi = F[1:-1]
    Q = Fi - np.outer(phi, h * phi @ Fi)
    rhs = np.vstack([Q, np.zeros((1, Q.shape[1]))]).astype(complex)
    lu = spla.splu(bordered.astype(complex))
    Y = lu.solve(rhs)[:m]
    return h * Q.conj().T @ Y


def eta_resolvent_form(model: PotentialModel, grid: Grid, E: float, F: np.ndarray, etas=None) -> np.ndarray:
    """``lim_{eta -> 0} <f_a, (h^V - E - i eta)^{-1} f_b>`` on an enlarged box.

    The box is large enough that the wave reflected at the cut is damped by
    ``exp(-25)`` at the smallest eta; the limit is a polynomial extrapolation
    in eta, accepted only when successive orders agree.  ``F`` holds the
    functions as columns on ``grid``; a 1D ``F`` gives a scalar.
    """
    etas = np.asarray(default_etas(E) if etas is None else etas, dtype=float)
    F = np.asarray(F, dtype=complex)
    single = F.ndim == 1
    F = F[:, None] if single else F
    length = 25 * np.sqrt(E) / etas.min()
    pad = max(0, int(np.ceil((length - grid.hi) / grid.h)))
    big = Grid(grid.lo - pad * grid.h, grid.hi + pad * grid.h, grid.n_points + 2 * pad)
    Fb = np.zeros((big.n_points, F.shape[1]), dtype=complex)
    Fb[pad: pad + grid.n_points] = F
    d, e = second_difference(big).reduced()
    base = d + model.V(big.interior)
    vals = []
    for eta in etas:
        Y = sla.solve_banded((1, 1), _banded(base - E - 1j * eta, e.astype(complex)), Fb[1:-1])
        vals.append(big.h * Fb[1:-1].conj().T @ Y)
    vals = np.array(vals)
    ests = []
    for m in range(len(etas) - 2, len(etas) + 1):
        coeffs = np.polynomial.polynomial.polyfit(etas[:m], vals[:m].reshape(m, -1), m - 1)
        ests.append(coeffs[0].reshape(vals.shape[1:]))
    scale = max(np.max(np.abs(ests[-1])), 1e-300)
    spread = max(np.max(np.abs(ests[-1] - ests[-2])), np.max(np.abs(ests[-2] - ests[-3])))
    if spread > 1e-3 * scale:
        raise ExtrapolationFailureError(f"eta extrapolation unstable: spread {spread:.2e}, scale {scale:.2e}")
    return ests[-1][0, 0] if single else ests[-1]


def im_resolvent_omega(V, grid: Grid, E: float, f, **kwargs) -> float:
    """``Im <f, (h^V - E - i0)^{-1} f>`` through the wave operator.

    ``Im R(E + i0) = omega* Im R0(E + i0) omega`` with
    ``Im R0 = pi / (2 sqrt(E)) sum_sigma tau_sigma* tau_sigma``.
    """
    g = wave_operator_apply(V, grid, E, f, **kwargs)
    amps = [trace_amplitude(grid, g, E, s) for s in (1, -1)]
    return float(np.pi / (2 * np.sqrt(E)) * sum(abs(a) ** 2 for a in amps))


def default_etas(E: float) -> np.ndarray:
    return 0.05 * min(E, 1.0) * np.arange(1, 7)


def resolvent_gram(problem: ResonanceProblem, level: LevelRecord, k: int, etas=None) -> np.ndarray:
    """Gram matrix of the (reduced) channel-k resolvent at e0 + i0 on the basis columns."""
    key = (level.n, level.j, k, None if etas is None else tuple(etas))
    if key in problem._gram_cache:
        return problem._gram_cache[key]
    F = problem.basis(level, k)
    E = level.e0 - problem.nu[k - 1]
    if k == level.j:
        G = _reduced_gram(problem, F, level.n)
    elif E < 0:
        G = _closed_gram(problem, F, E)
    else:
        if E < problem.near_threshold:
            raise NearThresholdError(f"channel {k}: e0 - nu_k = {E:.3e}")
        G = eta_resolvent_form(problem.model, problem.x_grid, E, F, etas)
    problem._gram_cache[key] = G
    return G


def second_order_full(problem: ResonanceProblem, level: LevelRecord, B: float, lam: float,
                      etas=None, channels: int | None = None) -> tuple[complex, np.ndarray]:
    """``e2 = -sum_k <U_jk phi_n, Rhat_k(e0 + i0) U_jk phi_n>`` over ``channels`` modes.

    Returns the total and the per-channel contributions.
    """
    _check_level(level, problem)
    K = len(problem.modes) if channels is None else channels
    per = np.zeros(K, dtype=complex)
    for k in range(1, K + 1):
        c = problem.coefficients(level, k, B, lam)
        if not np.any(c):
            continue
        G = resolvent_gram(problem, level, k, etas)
        per[k - 1] = -(c.conj() @ G @ c)
    return complex(per.sum()), per


def resonance_estimate(problem: ResonanceProblem, level: LevelRecord, B: float, lam: float,
                       channels: int | None = None) -> ResonanceEstimate:
    """e1 and e2; Re e2 from the resolvent sum, Im e2 from the golden rule."""
    e1 = first_order_shift(problem, level, B, lam)
    full, _ = second_order_full(problem, level, B, lam, channels=channels)
    width = golden_rule_width(problem, level, B, lam)
    return ResonanceEstimate(level, B, lam, e1, complex(full.real, width.total),
                             width.per_channel, full.imag)
