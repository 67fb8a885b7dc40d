"""Named potential families for the open-dot waveguide.

The Hamiltonian is ``(-i d_x - B y)^2 + V(x) - d_y^2 + W(y) + lam U(x, y)`` on
``R x S`` with ``S = (-a, a)`` (Dirichlet walls) or ``S = R``.  Units are
``hbar = 2m = 1``.

All family formulas are written with numpy operations that accept complex
arguments, which is what the dilated evaluation ``V(e^theta x)`` relies on.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from .errors import OutOfDomainError, SectorViolationError

LONGITUDINAL_FAMILIES = ("lorentzian2", "well_barrier", "zero")
CONFINEMENT_FAMILIES = ("zero", "harmonic", "quartic", "double_well")
DOT_FAMILIES = ("none", "gaussian", "gaussian_x", "separable", "gaussian_tilted")


@dataclass(frozen=True)
class LongitudinalPotential:
    """V(x).

    ``lorentzian2``: ``-depth (1 + (x/width)^2)^-2``.
    ``well_barrier``: ``(-depth + barrier (x/width)^2) (1 + (x/width)^2)^-3``,
    a well inside a barrier that carries shape resonances.
    """
    family: str = "lorentzian2"
    depth: float = 2.0
    width: float = 1.0
    barrier: float = 0.0

    def __post_init__(self):
        if self.family not in LONGITUDINAL_FAMILIES:
            raise ValueError(f"unknown longitudinal family {self.family!r}")
        if self.width <= 0:
            raise ValueError("width must be positive")

    def __call__(self, x):
        x = np.asarray(x)
        s = (x / self.width) ** 2
        if self.family == "lorentzian2":
            return -self.depth / (1 + s) ** 2
        if self.family == "well_barrier":
            return (-self.depth + self.barrier * s) / (1 + s) ** 3
        return np.zeros_like(x, dtype=np.result_type(x, float))

    @property
    def is_zero(self) -> bool:
        return self.family == "zero" or (self.depth == 0 and self.barrier == 0)

    def exact_integral(self) -> float | None:
        """Closed-form integral over the line (None when not available)."""
        if self.family == "lorentzian2":
            return -self.depth * self.width * np.pi / 2
        if self.family == "well_barrier":
            return self.width * np.pi / 8 * (self.barrier - 3 * self.depth)
        return 0.0


@dataclass(frozen=True)
class ConfinementPotential:
    """W(y) together with the cross-section S.

    ``half_width=None`` means ``S = R``; otherwise ``S = (-a, a)`` with
    Dirichlet walls.
    """
    family: str = "zero"
    c: float = 1.0
    kappa: float = 0.0
    beta: float = 0.0
    half_width: float | None = 1.0

    def __post_init__(self):
        if self.family not in CONFINEMENT_FAMILIES:
            raise ValueError(f"unknown confinement family {self.family!r}")
        if self.half_width is None and self.family == "zero":
            raise ValueError("S = R needs a confining W")
        if self.half_width is not None and self.half_width <= 0:
            raise ValueError("half_width must be positive")

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if self.family == "harmonic":
            return self.c * y ** 2
        if self.family == "quartic":
            return self.c * y ** 2 + self.kappa * y ** 4
        if self.family == "double_well":
            return self.kappa * y ** 4 - self.beta * y ** 2
        return np.zeros_like(y)

    @property
    def is_strip(self) -> bool:
        return self.half_width is not None

    @property
    def lower_bound_coefficient(self) -> float:
        """The c in W(y) >= c y^2 declared by the family."""
        if self.family in ("harmonic", "quartic"):
            return self.c
        return 0.0

    @property
    def parity_symmetric(self) -> bool:
        return True


@dataclass(frozen=True)
class DotPotential:
    """U(x, y).

    ``gaussian``: ``-A exp(-(x-x0)^2/wx^2) exp(-(y-y0)^2/wy^2)``;
    ``gaussian_x``: the x factor only;
    ``separable``: ``-A exp(-(x-x0)^2/wx^2) - Ay exp(-(y-y0)^2/wy^2)``;
    ``gaussian_tilted``: ``-A exp(-(x-x0)^2/wx^2) (1 + tilt y)``, sign-indefinite
    once ``|tilt| a > 1``.
    """
    family: str = "gaussian"
    amplitude: float = 1.0
    x_center: float = 0.0
    y_center: float = 0.3
    x_width: float = 1.0
    y_width: float = 0.5
    y_amplitude: float = 0.0
    tilt: float = 0.0

    def __post_init__(self):
        if self.family not in DOT_FAMILIES:
            raise ValueError(f"unknown dot family {self.family!r}")

    def x_factor(self, x):
        x = np.asarray(x)
        return np.exp(-((x - self.x_center) / self.x_width) ** 2)

    def y_factor(self, y):
        y = np.asarray(y, dtype=float)
        if self.family == "gaussian":
            return np.exp(-((y - self.y_center) / self.y_width) ** 2)
        if self.family == "gaussian_tilted":
            return 1 + self.tilt * y
        return np.ones_like(y)

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x), np.asarray(y, dtype=float))
        if self.family == "none":
            return np.zeros(x.shape, dtype=np.result_type(x, float))
        if self.family == "separable":
            return (-self.amplitude * self.x_factor(x)
                    - self.y_amplitude * np.exp(-((y - self.y_center) / self.y_width) ** 2))
        return -self.amplitude * self.x_factor(x) * self.y_factor(y)

    @property
    def is_separable(self) -> bool:
        return self.family in ("none", "gaussian_x", "separable")

    @property
    def is_zero(self) -> bool:
        return self.family == "none" or (self.amplitude == 0 and self.y_amplitude == 0)

    @property
    def is_gaussian(self) -> bool:
        return self.family != "none"


@dataclass(frozen=True)
class PotentialModel:
    longitudinal: LongitudinalPotential = field(default_factory=LongitudinalPotential)
    confinement: ConfinementPotential = field(default_factory=ConfinementPotential)
    dot: DotPotential = field(default_factory=DotPotential)
    alpha0: float = 0.6
    decay_eps: float = 1.0
    decay_constant: float = 10.0

    @property
    def sector_limit(self) -> float:
        return min(self.alpha0, np.pi / 4)

    @property
    def is_strip(self) -> bool:
        return self.confinement.is_strip

    @property
    def half_width(self) -> float | None:
        return self.confinement.half_width

    def V(self, x):
        return self.longitudinal(x)

    def W(self, y):
        return self.confinement(y)

    def U(self, x, y):
        return self.dot(x, y)

    def to_dict(self) -> dict:
        return asdict(self)


def _check_in_S(model: PotentialModel, y) -> None:
    a = model.half_width
    if a is not None and np.any(np.abs(np.asarray(y, dtype=float)) > a * (1 + 1e-12)):
        raise OutOfDomainError(f"y outside S = (-{a}, {a})")


def evaluate(model: PotentialModel, which: str, point):
    """Pointwise V, W or U.  ``point`` is x, y or (x, y) respectively."""
    if which == "V":
        return model.V(point)
    if which == "W":
        _check_in_S(model, point)
        return model.W(point)
    if which == "U":
        x, y = point
        _check_in_S(model, y)
        return model.U(x, y)
    raise ValueError(f"which must be 'V', 'W' or 'U', got {which!r}")


def check_sector(model: PotentialModel, theta: complex) -> None:
    limit = model.sector_limit
    if abs(complex(theta).imag) >= limit:
        raise SectorViolationError(
            f"|Im theta| = {abs(complex(theta).imag):g} not below min(alpha0, pi/4) = {limit:g}")


def evaluate_dilated(model: PotentialModel, which: str, x, theta: complex, y=None):
    """``V(e^theta x)`` or ``U(e^theta x, y)`` continued to complex theta."""
    check_sector(model, theta)
    z = np.exp(complex(theta)) * np.asarray(x, dtype=complex)
    if which == "V":
        return model.V(z)
    if which == "U":
        if y is None:
            raise ValueError("U needs a transverse coordinate y")
        _check_in_S(model, y)
        return model.U(z, y)
    raise ValueError(f"which must be 'V' or 'U', got {which!r}")


@dataclass
class AssumptionReport:
    confinement_ok: bool
    confinement_margin: float
    confinement_c: float
    longitudinal_nonzero: bool
    longitudinal_decay_ok: bool
    longitudinal_decay_ratio: float
    mean_ok: bool
    mean_integral: float
    dot_decay_ok: bool
    dot_decay_ratio: float
    dot_separable: bool
    notes: list[str] = field(default_factory=list)

    @property
    def all_ok(self) -> bool:
        return (self.confinement_ok and self.longitudinal_nonzero and self.longitudinal_decay_ok
                and self.mean_ok and self.dot_decay_ok)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["all_ok"] = self.all_ok
        return d


def _transverse_samples(model: PotentialModel, n: int = 2001) -> np.ndarray:
    a = model.half_width
    return np.linspace(-a, a, n) if a is not None else np.linspace(-20.0, 20.0, n)


def validate_assumptions(model: PotentialModel) -> AssumptionReport:
    """Sampled checks of the confinement, decay and mean conditions.

    Violations are reported, never raised.
    """
    notes = []
    eps = model.decay_eps
    C = model.decay_constant
    xs = np.concatenate([[0.0], np.logspace(-3, 3, 601)])
    xs = np.concatenate([-xs[::-1], xs])
    bracket = (1 + xs ** 2) ** ((2 + eps) / 2)

    v_ratio = float(np.max(np.abs(model.V(xs)) * bracket))
    v_nonzero = bool(np.any(model.V(xs) != 0))

    mean = model.longitudinal.exact_integral()
    numeric, _ = integrate.quad(lambda t: float(model.V(t)), -np.inf, np.inf, limit=400)
    if mean is not None and abs(numeric - mean) > 1e-6 * max(1.0, abs(mean)):
        notes.append(f"mean-integral quadrature {numeric:.10g} differs from closed form {mean:.10g}")
    mean = numeric

    ys = _transverse_samples(model)
    c = model.confinement.lower_bound_coefficient
    margin = float(np.min(model.W(ys) - c * ys ** 2))
    conf_ok = margin >= -1e-14
    if not model.is_strip and c < 1:
        conf_ok = False
        notes.append("S = R requires W(y) >= c y^2 with c >= 1")

    X, Y = np.meshgrid(xs, ys[:: max(1, len(ys) // 201)], indexing="ij")
    u_ratio = float(np.max(np.abs(model.U(X, Y)) * (1 + X ** 2) ** ((2 + eps) / 2)))

    if model.dot.is_gaussian:
        notes.append("Gaussian dot: analytic continuation decays only for |Im theta| < pi/4; "
                     "admitted up to the model sector limit min(alpha0, pi/4)")
    return AssumptionReport(
        confinement_ok=bool(conf_ok),
        confinement_margin=margin,
        confinement_c=c,
        longitudinal_nonzero=v_nonzero,
        longitudinal_decay_ok=v_ratio <= C,
        longitudinal_decay_ratio=v_ratio,
        mean_ok=mean <= 0,
        mean_integral=float(mean),
        dot_decay_ok=u_ratio <= C,
        dot_decay_ratio=u_ratio,
        dot_separable=model.dot.is_separable,
        notes=notes,
    )
