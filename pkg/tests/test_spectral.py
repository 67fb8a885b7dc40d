import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracle_values import DOUBLE_WELL_NU, MU_DEPTH8
from opendot.errors import DegenerateSpectrumError, GridMismatchError, SectorViolationError, TruncationTooSmallError
from opendot.grid import build_uniform_grid
from opendot.potentials import ConfinementPotential, LongitudinalPotential, PotentialModel
from opendot.spectral import (BOUND, CONTINUUM, RESONANCE, gram_matrix, richardson, solve_fiber,
                              solve_longitudinal, solve_scaled_longitudinal, solve_transverse)

STRIP = PotentialModel()
HARMONIC = PotentialModel(confinement=ConfinementPotential("harmonic", half_width=None))
DOUBLE_WELL = PotentialModel(confinement=ConfinementPotential("double_well", kappa=1.0, beta=6.0,
                                                              half_width=None))
LINE = build_uniform_grid(-8, 8, 16001)


def test_strip_levels():
    pairs = solve_transverse(STRIP, build_uniform_grid(-1, 1, 4001), 3)
    for j, pr in enumerate(pairs, start=1):
        assert pr.eigenvalue == pytest.approx((np.pi * j / 2) ** 2, rel=1e-4)


def test_harmonic_levels():
    pairs = solve_transverse(HARMONIC, LINE, 6)
    vals = np.array([p.eigenvalue for p in pairs])
    assert np.max(np.abs(vals / (2 * np.arange(1, 7) - 1) - 1)) < 1e-6


def test_double_well_against_spectral_oracle():
    coarse = np.array([p.eigenvalue for p in solve_transverse(DOUBLE_WELL, LINE.coarsened(), 4)])
    fine = np.array([p.eigenvalue for p in solve_transverse(DOUBLE_WELL, LINE, 4)])
    assert np.all(np.diff(fine) > 1e-9)
    assert np.max(np.abs(fine - DOUBLE_WELL_NU)) < 5e-6
    assert np.max(np.abs(richardson(coarse, fine) - DOUBLE_WELL_NU)) < 1e-8


def test_pairs_normalized_real_and_phase_fixed():
    for pr in solve_transverse(DOUBLE_WELL, LINE, 4) + solve_fiber(STRIP, 2.0, 0.7, build_uniform_grid(-1, 1, 801), 4):
        w = pr.grid.weights
        assert abs(np.sum(w * pr.samples ** 2) - 1) < 1e-10
        assert np.isrealobj(pr.samples)
        i = np.argmax(np.abs(pr.samples))
        assert pr.samples[i] > 0


def test_orthonormality():
    for pairs in (solve_transverse(HARMONIC, LINE, 6), solve_transverse(STRIP, build_uniform_grid(-1, 1, 801), 6)):
        assert np.max(np.abs(gram_matrix(pairs) - np.eye(6))) < 1e-8


def test_degenerate_spectrum_reported():
    # decoupled double well: the two lowest states coincide to machine precision
    deep = PotentialModel(confinement=ConfinementPotential("double_well", kappa=1.0, beta=40.0,
                                                           half_width=None))
    with pytest.raises(DegenerateSpectrumError):
        solve_transverse(deep, build_uniform_grid(-8, 8, 4001), 2)


def test_transverse_grid_must_span_strip():
    with pytest.raises(GridMismatchError):
        solve_transverse(STRIP, build_uniform_grid(-2, 2, 101), 2)


def test_longitudinal_bound_states():
    pairs = solve_longitudinal(STRIP, build_uniform_grid(-40, 40, 8001))
    assert len(pairs) >= 1 and pairs[0].eigenvalue < 0
    for pr in pairs:
        assert abs(pr.samples[0]) < 1e-8 and abs(pr.samples[-1]) < 1e-8
    free = PotentialModel(longitudinal=LongitudinalPotential("zero"))
    assert solve_longitudinal(free, build_uniform_grid(-10, 10, 201)) == []


def test_depth8_dense_grid_regression_and_oracle():
    g = build_uniform_grid(-60, 60, 16001)
    m = PotentialModel(longitudinal=LongitudinalPotential(depth=8.0))
    fine = [p.eigenvalue for p in solve_longitudinal(m, g)]
    coarse = [p.eigenvalue for p in solve_longitudinal(m, g.coarsened())]
    assert len(fine) == len(coarse) == 2
    assert fine == pytest.approx([-4.942713030431705, -0.8528407927355302], abs=1e-10)
    assert np.max(np.abs(np.array(fine) - MU_DEPTH8)) < 5e-5
    assert np.max(np.abs(richardson(np.array(coarse), np.array(fine)) - MU_DEPTH8)) < 1e-8


def test_bound_state_count_stable_under_refinement():
    g = build_uniform_grid(-60, 60, 3001)
    for depth in (2.0, 8.0):
        m = PotentialModel(longitudinal=LongitudinalPotential(depth=depth))
        assert len(solve_longitudinal(m, g)) == len(solve_longitudinal(m, g.refined()))


def test_truncation_too_small():
    m = PotentialModel(longitudinal=LongitudinalPotential(depth=0.05))
    with pytest.raises(TruncationTooSmallError):
        solve_longitudinal(m, build_uniform_grid(-5, 5, 501))


def test_harmonic_fiber_exact():
    p_vals = np.linspace(-3, 3, 13)
    for B in (0.5, 1.0, 2.0, 5.0):
        for p in p_vals:
            exact = np.sqrt(1 + B * B) + p * p / (1 + B * B)
            assert solve_fiber(HARMONIC, B, p, LINE, 1)[0].eigenvalue == pytest.approx(exact, rel=1e-6)


def test_fiber_reduces_at_zero_field():
    g = build_uniform_grid(-1, 1, 801)
    a = [p.eigenvalue for p in solve_fiber(STRIP, 0.0, 0.0, g, 4)]
    b = [p.eigenvalue for p in solve_transverse(STRIP, g, 4)]
    assert a == b


@given(B=st.floats(0, 6), p=st.floats(-6, 6))
@settings(max_examples=40, deadline=None)
def test_fiber_above_thresholds(B, p):
    g = build_uniform_grid(-1, 1, 401)
    nu = np.array([q.eigenvalue for q in solve_transverse(STRIP, g, 3)])
    nuB = np.array([q.eigenvalue for q in solve_fiber(STRIP, B, p, g, 3)])
    assert np.all(nuB >= nu - 1e-12 * nu)


def test_feynman_hellmann_identity():
    g = build_uniform_grid(-1, 1, 2001)
    for B, p in ((1.0, 0.3), (2.0, -1.1), (5.0, 2.0)):
        step = 1e-4
        fd = (solve_fiber(STRIP, B, p + step, g, 1)[0].eigenvalue
              - solve_fiber(STRIP, B, p - step, g, 1)[0].eigenvalue) / (2 * step)
        chi = solve_fiber(STRIP, B, p, g, 1)[0].samples
        fh = np.sum(g.weights * (-2 * (B * g.nodes - p)) * chi ** 2)
        assert fd == pytest.approx(fh, rel=1e-5)


def test_free_scaled_spectrum_on_ray():
    free = PotentialModel(longitudinal=LongitudinalPotential("zero"))
    spec = solve_scaled_longitudinal(free, 0.3j, build_uniform_grid(-20, 20, 801))
    z = spec.eigenvalues[np.abs(spec.eigenvalues) > 1e-6]
    assert np.max(np.abs(np.angle(z) + 0.6)) < 0.02
    assert set(spec.classes) == {CONTINUUM}


def test_scaled_bound_state_matches_real_solver():
    g = build_uniform_grid(-20, 20, 1201)
    spec = solve_scaled_longitudinal(STRIP, 0.3j, g)
    # isolated eigenvalues are Richardson-refined on the 4x and 8x grids; compare at that resolution
    mu = richardson(np.array([p.eigenvalue for p in solve_longitudinal(STRIP, g.refined(4))]),
                    np.array([p.eigenvalue for p in solve_longitudinal(STRIP, g.refined(8))]))
    bound = spec.bound
    assert len(bound) == len(mu)
    assert np.max(np.abs(bound.real - mu)) < 1e-6


def test_intrinsic_resonances_theta_independent():
    g = build_uniform_grid(-20, 20, 1201)
    barrier = PotentialModel(longitudinal=LongitudinalPotential("well_barrier", depth=2.0, barrier=40.0))
    for model in (STRIP, barrier):
        a = solve_scaled_longitudinal(model, 0.2j, g).resonances
        b = solve_scaled_longitudinal(model, 0.3j, g)
        # candidates visible at the smaller angle are also seen at the larger one
        for z in a:
            assert np.min(np.abs(b.resonances - z)) < 1e-4
    assert len(a) >= 1
    rho = a[np.argmin(np.abs(a - 2.5))]
    assert rho.imag < 0
    assert RESONANCE in b.classes and BOUND not in b.classes


def test_scaled_sector_violation():
    with pytest.raises(SectorViolationError):
        solve_scaled_longitudinal(STRIP, 0.7j, build_uniform_grid(-5, 5, 101))
