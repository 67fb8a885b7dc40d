import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opendot.errors import OutOfDomainError, SectorViolationError
from opendot.potentials import (ConfinementPotential, DotPotential, LongitudinalPotential, PotentialModel,
                                evaluate, evaluate_dilated, validate_assumptions)


def test_point_values():
    m = PotentialModel()
    assert evaluate(m, "V", 0.0) == -2.0
    h = PotentialModel(confinement=ConfinementPotential("harmonic", half_width=None))
    assert evaluate(h, "W", 3.0) == 9.0


def test_out_of_domain():
    m = PotentialModel()
    with pytest.raises(OutOfDomainError):
        evaluate(m, "W", 1.5)
    with pytest.raises(OutOfDomainError):
        evaluate(m, "U", (0.0, -2.0))


def test_separability_flag():
    sep = PotentialModel(dot=DotPotential("separable", y_amplitude=1.0))
    assert sep.dot.is_separable
    assert not PotentialModel().dot.is_separable
    assert validate_assumptions(sep).dot_separable


def test_dilated_identity_and_closed_form():
    m = PotentialModel()
    x = np.linspace(-5, 5, 101)
    assert np.array_equal(evaluate_dilated(m, "V", x, 0.0), m.V(x).astype(complex))
    beta = 0.3
    z = evaluate_dilated(m, "V", 1.0, 1j * beta)
    ref = -2.0 / (1 + np.exp(2j * beta)) ** 2
    assert abs(z - ref) < 1e-14
    assert abs(z) == pytest.approx(abs(ref), rel=1e-14)


@given(theta=st.floats(-2, 2), x=st.floats(-20, 20))
@settings(max_examples=50, deadline=None)
def test_real_theta_gives_real_values(theta, x):
    m = PotentialModel()
    v = evaluate_dilated(m, "V", x, theta)
    assert abs(v.imag) <= 1e-14 * max(abs(v), 1e-300)
    u = evaluate_dilated(m, "U", x, theta, y=0.2)
    assert abs(u.imag) <= 1e-14 * max(abs(u), 1e-300)


def test_sector_violation():
    m = PotentialModel(alpha0=0.6)
    with pytest.raises(SectorViolationError):
        evaluate_dilated(m, "V", 1.0, 0.6j)
    with pytest.raises(SectorViolationError):
        evaluate_dilated(PotentialModel(alpha0=2.0), "V", 1.0, 1j * np.pi / 4)
    evaluate_dilated(m, "V", 1.0, 0.59j)


def test_mean_condition():
    rep = validate_assumptions(PotentialModel())
    assert rep.mean_ok
    assert rep.mean_integral == pytest.approx(-np.pi, rel=1e-8)
    rep = validate_assumptions(PotentialModel(longitudinal=LongitudinalPotential(depth=-2.0)))
    assert not rep.mean_ok


def test_confinement_bound_with_equality():
    h = PotentialModel(confinement=ConfinementPotential("harmonic", c=1.0, half_width=None))
    rep = validate_assumptions(h)
    assert rep.confinement_ok and rep.confinement_margin == 0.0


def test_line_needs_c_at_least_one():
    h = PotentialModel(confinement=ConfinementPotential("harmonic", c=0.5, half_width=None))
    assert not validate_assumptions(h).confinement_ok


def test_decay_checks():
    rep = validate_assumptions(PotentialModel())
    assert rep.longitudinal_decay_ok and rep.dot_decay_ok and rep.all_ok


def test_well_barrier_integral():
    lp = LongitudinalPotential("well_barrier", depth=2.0, barrier=4.0)
    rep = validate_assumptions(PotentialModel(longitudinal=lp))
    assert rep.mean_integral == pytest.approx(lp.exact_integral(), rel=1e-8)
    assert all("differs" not in note for note in rep.notes)
