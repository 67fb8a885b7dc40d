"""Bound states below the essential spectrum in a strong magnetic field.

Here the longitudinal well and the dot are merged into a single potential
``U_tot(x, y) = V(x) + lam U(x, y)``.  The free operator fibers over the
longitudinal momentum p into ``h_B(p) = -d_y^2 + (B y - p)^2 + W``; the
essential spectrum starts at ``min_p nu_1^B(p)``.  A trial function
``exp(i p0 x) phi_eps(x) chi_1^B(y; p0)`` with a plateau-and-stretch profile
makes the quadratic form of ``H - nu_1^B(p0)`` negative whenever
``int U_11(x; p0) dx < 0``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import integrate, optimize

from .coupling import _dot_terms
from .errors import BudgetExceededError, RangeTooNarrowError
from .grid import Grid, build_uniform_grid, quadrature
from .potentials import PotentialModel
from .spectral import solve_fiber

CERTIFIED = "certified"
INCONCLUSIVE = "inconclusive"
EPS_GRID = tuple(10.0 ** -k for k in range(1, 7))
D_GRID = (5.0, 10.0, 20.0, 40.0)
GRID_BUDGET = 301


@dataclass
class DispersionCurve:
    j: int
    B: float
    p: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    minima: list[tuple[float, float]] = field(default_factory=list)

    @property
    def minimum(self) -> tuple[float, float]:
        return min(self.minima, key=lambda m: m[1])


def _band(model: PotentialModel, B: float, p: float, grid: Grid, j: int) -> float:
    return solve_fiber(model, B, p, grid, j)[j - 1].eigenvalue


def default_p_range(model: PotentialModel, B: float, scale: float = 3.0) -> tuple[float, float]:
    a = model.half_width
    pscale = scale if a is None else max(scale, np.pi / (2 * a))
    return -(1 + B) * pscale, (1 + B) * pscale


def dispersion_curve(model: PotentialModel, B: float, j: int, grid: Grid,
                     p_range: tuple[float, float] | None = None, samples: int = 121,
                     margin: float = 0.5, widen: int = 3) -> DispersionCurve:
    """Sample ``p -> nu_j^B(p)`` and refine every interior local minimum by golden section.

    The range must leave both end values at least ``margin`` above the lowest
    sample; otherwise it is doubled up to ``widen`` times before giving up.
    """
    lo, hi = p_range if p_range is not None else default_p_range(model, B)
    for _ in range(widen + 1):
        p = np.linspace(lo, hi, samples)
        vals = np.array([_band(model, B, pi, grid, j) for pi in p])
        low = vals.min()
        if vals[0] - low >= margin and vals[-1] - low >= margin:
            break
        lo, hi = 2 * lo, 2 * hi
    else:
        raise RangeTooNarrowError(f"p in [{lo / 2:g}, {hi / 2:g}] does not bracket the band minimum")

    minima = []
    for i in range(1, samples - 1):
        if vals[i] <= vals[i - 1] and vals[i] < vals[i + 1]:
            res = optimize.minimize_scalar(lambda q: _band(model, B, q, grid, j),
                                           bracket=(p[i - 1], p[i], p[i + 1]), method="golden",
                                           tol=1e-10)
            pm = float(res.x)
            # golden section resolves p only to ~sqrt(machine eps); polish on the slope
            sa = fiber_slope_expectation(model, B, p[i - 1], grid, j)
            sb = fiber_slope_expectation(model, B, p[i + 1], grid, j)
            if sa < 0 < sb:
                pm = optimize.brentq(lambda q: fiber_slope_expectation(model, B, q, grid, j),
                                     p[i - 1], p[i + 1], xtol=1e-14)
            minima.append((pm, float(_band(model, B, pm, grid, j))))
    merged: list[tuple[float, float]] = []
    for pm, vm in sorted(minima):
        if merged and abs(pm - merged[-1][0]) < 1e-6:
            continue
        merged.append((pm, vm))
    return DispersionCurve(j, float(B), p, vals, merged)


def essential_bottom(curve: DispersionCurve, tol: float = 1e-8) -> tuple[float, list[float]]:
    """``min_p nu_1^B(p)`` and every minimizer within ``tol`` of it."""
    if curve.j != 1:
        raise ValueError("the essential spectrum bottom is read off band 1")
    best = curve.minimum[1]
    p0 = [pm for pm, vm in curve.minima if vm - best <= tol * max(1.0, abs(best))]
    return best, p0


def fiber_slope(model: PotentialModel, B: float, p: float, grid: Grid, step: float = 1e-4) -> float:
    """Central-difference ``d nu_1^B / dp``."""
    return (_band(model, B, p + step, grid, 1) - _band(model, B, p - step, grid, 1)) / (2 * step)


def fiber_slope_expectation(model: PotentialModel, B: float, p: float, grid: Grid, j: int = 1) -> float:
    """``<chi_j, -2 (B y - p) chi_j>``, the slope predicted by Feynman-Hellmann."""
    chi = solve_fiber(model, B, p, grid, j)[j - 1].samples
    return float(quadrature(grid, -2 * (B * grid.nodes - p) * chi ** 2))


def _longitudinal_terms(model: PotentialModel, lam: float):
    """``U_tot`` as ``(coef, fx, gy)`` products; gy None means the constant 1."""
    terms = []
    if not model.longitudinal.is_zero:
        terms.append((1.0, model.V, None))
    if lam != 0:
        for coef, fx, gy in _dot_terms(model):
            terms.append((lam * coef, fx, gy))
    return terms


def merged_potential(model: PotentialModel, lam: float):
    """``U_tot(x, y) = V(x) + lam U(x, y)``."""
    return lambda x, y: model.V(x) + lam * model.U(x, y)


@dataclass
class ProjectedPotential:
    """``U_11(x; p0) = sum_b c_b f_b(x)`` with ``c_b = coef_b <chi, g_b chi>``."""
    weights: list[float]
    profiles: list = field(repr=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for w, f in zip(self.weights, self.profiles):
            out = out + w * f(x)
        return out


def project_potential(model: PotentialModel, lam: float, chi: np.ndarray, grid: Grid) -> ProjectedPotential:
    weights, profiles = [], []
    for coef, fx, gy in _longitudinal_terms(model, lam):
        g = 1.0 if gy is None else gy(grid.nodes)
        weights.append(float(coef * quadrature(grid, g * chi ** 2)))
        profiles.append(fx)
    return ProjectedPotential(weights, profiles)


def _line_integral(f, points=()) -> float:
    pts = sorted(set(float(p) for p in points))
    if not pts:
        pts = [0.0]
    total = 0.0
    edges = [-np.inf] + pts + [np.inf]
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(lambda t: float(f(t)), a, b, limit=400, epsabs=1e-13, epsrel=1e-11)
        total += val
    return total


def _centers(model: PotentialModel) -> list[float]:
    return [0.0, model.dot.x_center]


def attractivity_integral(model: PotentialModel, B: float, p0: float, grid: Grid, lam: float = 1.0) -> float:
    """``int_R int_S U_tot(x, y) |chi_1^B(y; p0)|^2 dy dx``."""
    chi = solve_fiber(model, B, p0, grid, 1)[0].samples
    U11 = project_potential(model, lam, chi, grid)
    return _line_integral(U11, _centers(model))


def g_profile(t, d: float):
    """1 on ``[-d, d]``, raised-cosine shoulders of unit width, 0 beyond."""
    s = np.abs(np.asarray(t, dtype=float)) - d
    out = np.where(s <= 0, 1.0, 0.5 * (1 + np.cos(np.pi * np.clip(s, 0, 1))))
    return np.where(s >= 1, 0.0, out)


G_PRIME_NORM2 = np.pi ** 2 / 4
SHOULDER_NORM2 = 3.0 / 8.0


def trial_profile(x, eps: float, d: float):
    """``phi_eps``: the plateau is kept, the shoulders are stretched by ``1 / eps``."""
    x = np.asarray(x, dtype=float)
    s = np.abs(x) - d
    return g_profile(np.where(s > 0, np.sign(x) * (d + eps * s), x), d)


def trial_derivative(x, eps: float, d: float):
    x = np.asarray(x, dtype=float)
    s = eps * (np.abs(x) - d)
    inside = (s > 0) & (s < 1)
    return np.where(inside, -np.sign(x) * eps * 0.5 * np.pi * np.sin(np.pi * np.clip(s, 0, 1)), 0.0)


def _trial_breakpoints(eps: float, d: float, model: PotentialModel) -> list[float]:
    edge = d + 1.0 / eps
    # geometric breakpoints keep quad accurate on the long stretched tails
    tails = [d + 2.0 ** k for k in range(int(np.log2(1.0 / eps)) + 1)]
    return [-edge, -d, d, edge] + tails + [-t for t in tails] + _centers(model)


def _finite_integral(f, lo: float, hi: float, points) -> float:
    pts = sorted({lo, hi, *[p for p in points if lo < p < hi]})
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        val, _ = integrate.quad(lambda t: float(f(t)), a, b, limit=400, epsabs=1e-13, epsrel=1e-11)
        total += val
    return total


@dataclass
class StrongFieldCertificate:
    B: float
    p0: float
    essential_bottom: float
    attractivity: float
    eps: float | None
    d: float | None
    q_value: float
    verdict: str
    profile: str = "plateau+raised-cosine"
    full_form: float = float("nan")
    form_difference: float = float("nan")
    fh_term: float = float("nan")
    grid_values: dict = field(default_factory=dict, repr=False)
    direct_eigenvalue: float | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["grid_values"] = {f"{e:g},{d:g}": v for (e, d), v in self.grid_values.items()}
        return out


def reduced_form(U11, eps: float, d: float, model: PotentialModel) -> tuple[float, float]:
    """``(eps ||g'||^2 + <phi_eps, U_11 phi_eps>, <phi_eps, U_11 phi_eps>)``."""
    edge = d + 1.0 / eps
    pot = _finite_integral(lambda t: trial_profile(t, eps, d) ** 2 * U11(t), -edge, edge,
                           _trial_breakpoints(eps, d, model))
    return eps * G_PRIME_NORM2 + pot, pot


def full_form(model: PotentialModel, B: float, p0: float, eps: float, d: float, chi: np.ndarray,
              nu: float, grid: Grid, U11) -> tuple[float, float]:
    """Unreduced form on ``exp(i p0 x) phi_eps chi`` with every term evaluated separately.

    Returns the form value and the Feynman-Hellmann term ``2 <chi, (B y - p0) chi> ||phi||^2``
    that the reduction drops.
    """
    edge = d + 1.0 / eps
    pts = _trial_breakpoints(eps, d, model)
    dphi2 = _finite_integral(lambda t: trial_derivative(t, eps, d) ** 2, -edge, edge, pts)
    phi2 = _finite_integral(lambda t: trial_profile(t, eps, d) ** 2, -edge, edge, pts)
    pot = _finite_integral(lambda t: trial_profile(t, eps, d) ** 2 * U11(t), -edge, edge, pts)
    y = grid.nodes
    h = grid.h
    dchi2 = float(np.sum(np.diff(chi) ** 2) / h)
    mag = float(quadrature(grid, (B * y - p0) ** 2 * chi ** 2))
    wterm = float(quadrature(grid, model.W(y) * chi ** 2))
    fh = 2 * float(quadrature(grid, (B * y - p0) * chi ** 2)) * phi2
    value = dphi2 + phi2 * (dchi2 + mag + wterm - nu) + pot
    return value, fh


def variational_certificate(model: PotentialModel, B: float, p0: float, grid: Grid, lam: float = 1.0,
                            eps_grid=EPS_GRID, d_grid=D_GRID, bottom: float | None = None) -> StrongFieldCertificate:
    """Scan the trial family over ``(eps, d)``; the first negative value certifies.

    ``eps`` is scanned from large to small and ``d`` from small to large.
    """
    pair = solve_fiber(model, B, p0, grid, 1)[0]
    chi, nu = pair.samples, pair.eigenvalue
    U11 = project_potential(model, lam, chi, grid)
    attract = _line_integral(U11, _centers(model))
    values = {}
    chosen = None
    for eps in sorted(eps_grid, reverse=True):
        for d in sorted(d_grid):
            q, _ = reduced_form(U11, eps, d, model)
            values[(eps, d)] = q
            if chosen is None and q < 0:
                chosen = (eps, d)
    if chosen is None:
        eps, d = min(values, key=values.get)
        verdict = INCONCLUSIVE
    else:
        eps, d = chosen
        verdict = CERTIFIED
    q = values[(eps, d)]
    full, fh = full_form(model, B, p0, eps, d, chi, nu, grid, U11)
    return StrongFieldCertificate(
        B=float(B), p0=float(p0), essential_bottom=float(nu if bottom is None else bottom),
        attractivity=attract, eps=eps, d=d, q_value=q, verdict=verdict,
        full_form=full, form_difference=full - q, fh_term=fh, grid_values=values)


def discrete_fiber_bottom(model: PotentialModel, B: float, y_grid: Grid, hx: float,
                          p_range: tuple[float, float] | None = None) -> float:
    """``min_p`` of the lowest eigenvalue of the x-discretized fiber.

    The Peierls hopping turns ``(B y - p)^2`` into ``(2 - 2 cos((B y - p) hx)) / hx^2``.
    """
    from .spectral import _lowest_real

    y = y_grid.nodes

    def band(p):
        pot = (2 - 2 * np.cos((B * y - p) * hx)) / hx ** 2 + model.W(y)
        return _lowest_real(y_grid, pot, 1, check_decay=False)[0].eigenvalue

    lo, hi = p_range if p_range is not None else default_p_range(model, B)
    ps = np.linspace(lo, hi, 121)
    vals = np.array([band(p) for p in ps])
    i = int(np.argmin(vals))
    i = min(max(i, 1), ps.size - 2)
    res = optimize.minimize_scalar(band, bracket=(ps[i - 1], ps[i], ps[i + 1]), method="golden", tol=1e-10)
    return float(min(res.fun, vals.min()))


def direct_ground_state(model: PotentialModel, B: float, x_grid: Grid, y_grid: Grid,
                        lam: float = 1.0, budget: int = GRID_BUDGET) -> float:
    """Lowest eigenvalue of the discretized 2D Hamiltonian in the Landau gauge.

    Dirichlet box in x, the transverse grid in y, Peierls phases on x-links.
    """
    nx, ny = x_grid.n_points, y_grid.n_points
    if nx > budget or ny > budget:
        raise BudgetExceededError(f"2D grid {nx} x {ny} exceeds {budget} x {budget}")
    x = x_grid.interior
    y = y_grid.interior
    mx, my = x.size, y.size
    hx, hy = x_grid.h, y_grid.h
    phase = np.exp(-1j * B * y * hx)
    # unknown index = ix * my + iy
    diag = np.full(mx * my, 2 / hx ** 2 + 2 / hy ** 2, dtype=complex)
    X, Y = np.meshgrid(x, y, indexing="ij")
    diag += (model.W(Y) + merged_potential(model, lam)(X, Y)).ravel()
    hop_x = -np.tile(phase, mx - 1) / hx ** 2
    hop_y = np.tile(np.append(np.full(my - 1, -1 / hy ** 2), 0.0), mx)[:-1]
    H = sp.diags([diag, hop_x, hop_x.conj(), hop_y, hop_y], [0, my, -my, 1, -1], format="csc")
    # H >= (free lattice bottom) + min U_tot, so this shift lies below the spectrum
    pot = merged_potential(model, lam)(X, Y)
    shift = discrete_fiber_bottom(model, B, y_grid, hx) + float(np.min(pot)) - 0.1
    vals = spla.eigsh(H, k=1, sigma=shift, which="LM", v0=np.ones(H.shape[0], dtype=complex),
                      return_eigenvectors=False)
    return float(np.min(vals))


def default_direct_grids(model: PotentialModel, length: float = 15.0, n: int = GRID_BUDGET,
                         y_length: float = 6.0) -> tuple[Grid, Grid]:
    a = model.half_width
    yg = build_uniform_grid(-a, a, n) if a is not None else build_uniform_grid(-y_length, y_length, n)
    return build_uniform_grid(-length, length, n), yg
