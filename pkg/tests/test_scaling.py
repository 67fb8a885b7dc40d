import numpy as np
import pytest

from opendot import build_config, prepare_problem
from opendot.coupling import assemble_channel_operator
from opendot.errors import ContinuumContaminationError, NoPoleInWindowError, SectorViolationError
from opendot.grid import build_uniform_grid, quadrature
from opendot.perturbation import EMBEDDED
from opendot.potentials import LongitudinalPotential, PotentialModel
from opendot.scaling import channel_spectrum, continuum_diagnostic, locate_pole, pole_shift, theta_independence
from opendot.spectral import BOUND, CONTINUUM, solve_longitudinal, solve_transverse


def test_unperturbed_pole_is_e0(default_cfg, default_problem, embedded_level, default_K):
    op = assemble_channel_operator(default_cfg.model, default_cfg.theta, 0.0, 0.0, default_K,
                                   default_cfg.x_grid(), default_problem.modes)
    res = locate_pole(op, embedded_level.e0)
    assert abs(res.pole - embedded_level.e0) <= res.discretization_error
    # the raw dilated stencil carries a tiny complex offset, bounded by the grid estimate
    assert abs(res.pole.imag) <= res.discretization_error


def test_perturbed_pole_lower_half_plane(default_cfg, default_problem, embedded_level, default_K):
    pole, base = pole_shift(default_cfg.model, default_problem.modes, default_cfg.x_grid(), embedded_level.e0,
                            default_cfg.theta, 5e-3, 0.0, default_K)
    assert pole.pole.imag < 0
    assert abs(base.pole.imag) <= base.discretization_error
    assert pole.e0 == embedded_level.e0 and pole.K == default_K


def test_separable_dot_pole_stays_real():
    cfg = build_config({"potential": {"dot": {"family": "separable", "y_amplitude": 1.0}}})
    prob = prepare_problem(cfg.model, cfg.x_grid(), cfg.y_grid(), 4)
    level = next(lv for lv in prob.levels() if lv.status == EMBEDDED)
    pole, _ = pole_shift(cfg.model, prob.modes, cfg.x_grid(), level.e0, cfg.theta, 0.0, 0.05,
                         min(level.k_open + 3, 4))
    assert abs(pole.pole.imag) < 1e-9


def test_theta_drift(default_cfg, default_problem, embedded_level, default_K):
    rep = theta_independence(default_cfg.model, default_problem.modes, default_cfg.x_grid(), embedded_level.e0,
                             [0.2j, 0.3j, 0.4j], 5e-3, 0.0, default_K)
    assert rep.drift < 1e-5
    assert rep.accepted and all(rep.usable)


def test_theta_real_flagged_and_sector(default_cfg, default_problem, embedded_level):
    rep = theta_independence(default_cfg.model, default_problem.modes, default_cfg.x_grid(), embedded_level.e0,
                             [0.1, 0.3j], 5e-3, 0.0, 2)
    assert rep.usable == [False, True]
    assert rep.poles[0] is None and not rep.accepted
    with pytest.raises(SectorViolationError):
        theta_independence(default_cfg.model, default_problem.modes, default_cfg.x_grid(), embedded_level.e0,
                           [0.3j, 0.7j], 5e-3, 0.0, 2)


def test_first_order_matches_pole_derivative(default_cfg, default_problem, embedded_level, default_K):
    """d pole / d lambda at zero coupling equals <phi_n, U_jj phi_n>."""
    dl = 1e-2
    args = (default_cfg.model, default_problem.modes, default_cfg.x_grid(), embedded_level.e0,
            default_cfg.theta)
    plus, base = pole_shift(*args, 0.0, dl, default_K)
    minus, _ = pole_shift(*args, 0.0, -dl, default_K, baseline=base)
    slope = (plus.pole - minus.pole).real / (2 * dl)
    j = embedded_level.j - 1
    phi = default_problem.phi(embedded_level.n)
    ref = quadrature(default_problem.x_grid, default_problem.couplings.U[j, j] * phi ** 2)
    assert slope == pytest.approx(ref, rel=1e-3)


def test_pole_continuous_in_field(default_cfg, default_problem, embedded_level, default_K):
    Bs = np.linspace(2e-3, 1e-2, 5)
    base = None
    poles = []
    for B in Bs:
        res, base = pole_shift(default_cfg.model, default_problem.modes, default_cfg.x_grid(), embedded_level.e0,
                               default_cfg.theta, B, 0.0, default_K, baseline=base)
        poles.append(res.pole)
    steps = np.abs(np.diff(poles))
    # a root mix-up shows as a step ten times larger than its neighbour
    assert np.all(steps[1:] < 10 * steps[:-1]) and np.all(steps[:-1] < 10 * steps[1:])
    assert np.all(np.diff(np.abs(np.imag(poles))) > 0)


def test_no_pole_in_window(default_cfg, default_problem, embedded_level):
    op = assemble_channel_operator(default_cfg.model, default_cfg.theta, 0.0, 0.0, 2,
                                   default_cfg.x_grid(), default_problem.modes)
    with pytest.raises(NoPoleInWindowError):
        locate_pole(op, embedded_level.e0 + 0.3, radius=1e-3, refine=False)


def test_continuum_contamination(default_cfg, default_problem):
    op = assemble_channel_operator(default_cfg.model, default_cfg.theta, 0.0, 0.0, 2,
                                   default_cfg.x_grid(), default_problem.modes)
    on_ray = default_problem.nu[0] + 3.0 * np.exp(-0.6j)
    with pytest.raises(ContinuumContaminationError):
        locate_pole(op, on_ray, radius=0.05, refine=False)


def test_free_channel_spectrum_on_rays():
    model = PotentialModel(longitudinal=LongitudinalPotential("zero"))
    modes = solve_transverse(model, build_uniform_grid(-1, 1, 801), 2)
    op = assemble_channel_operator(model, 0.3j, 0.0, 0.0, 2, build_uniform_grid(-20, 20, 601), modes)
    z = channel_spectrum(op)
    rep = continuum_diagnostic(z, 0.3j, op.thresholds, energy_cap=30.0)
    assert set(rep.classes) == {CONTINUUM}
    assert rep.max_angle < 0.02
    assert np.all(np.abs(rep.eigenvalues) <= 30.0)
    assert rep.eigenvalues.size < z.size


def test_bound_states_off_the_rays():
    model = PotentialModel()
    g = build_uniform_grid(-20, 20, 601)
    modes = solve_transverse(model, build_uniform_grid(-1, 1, 801), 2)
    op = assemble_channel_operator(model, 0.3j, 0.0, 0.0, 2, g, modes)
    mu = np.array([p.eigenvalue for p in solve_longitudinal(model, g)])
    bound = np.concatenate([mu + m.eigenvalue for m in modes])
    # the dilated stencil moves bound energies by O(h^2); match at that scale
    rep = continuum_diagnostic(channel_spectrum(op), 0.3j, op.thresholds, energy_cap=30.0, bound=bound,
                               match_tol=1e-3)
    is_bound = np.array([c == BOUND for c in rep.classes])
    found = rep.eigenvalues[is_bound]
    assert found.size == bound.size
    assert np.max(np.min(np.abs(found[:, None] - bound[None, :]), axis=0)) < 1e-3
    assert np.min(rep.angular_deviation[is_bound]) > 0.1
