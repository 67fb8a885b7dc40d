"""Embedded eigenvalues, resonances and strong-field bound states of an open quantum dot."""
from .config import RunConfig, build_config, load_config
from .coupling import ChannelOperator, ModeCouplings, assemble_channel_operator, dot_projections, transverse_moments
from .errors import OpenDotError
from .grid import Grid, TridiagonalOperator, build_uniform_grid, quadrature, second_difference
from .perturbation import (LevelRecord, ResonanceEstimate, classify_levels, first_order_shift,
                           golden_rule_width, prepare_problem, resonance_estimate, second_order_full,
                           trace_amplitude, wave_operator_apply)
from .potentials import (ConfinementPotential, DotPotential, LongitudinalPotential, PotentialModel,
                         evaluate, evaluate_dilated, validate_assumptions)
from .scaling import PoleResult, continuum_diagnostic, locate_pole, pole_shift, theta_independence
from .spectral import (ComplexSpectrum, SpectralPair, solve_fiber, solve_longitudinal,
                       solve_scaled_longitudinal, solve_transverse)
from .strong_field import (DispersionCurve, StrongFieldCertificate, attractivity_integral,
                           direct_ground_state, dispersion_curve, essential_bottom, variational_certificate)

__version__ = "0.1.0"

__all__ = [
    "RunConfig", "build_config", "load_config",
    "ChannelOperator", "ModeCouplings", "assemble_channel_operator", "dot_projections",
    "transverse_moments", "OpenDotError", "Grid", "TridiagonalOperator", "build_uniform_grid",
    "quadrature", "second_difference", "LevelRecord", "ResonanceEstimate", "classify_levels",
    "first_order_shift", "golden_rule_width", "prepare_problem", "resonance_estimate",
    "second_order_full", "trace_amplitude", "wave_operator_apply", "ConfinementPotential",
    "DotPotential", "LongitudinalPotential", "PotentialModel", "evaluate", "evaluate_dilated",
    "validate_assumptions", "PoleResult", "continuum_diagnostic", "locate_pole", "pole_shift",
    "theta_independence", "ComplexSpectrum", "SpectralPair", "solve_fiber", "solve_longitudinal",
    "solve_scaled_longitudinal", "solve_transverse", "DispersionCurve", "StrongFieldCertificate",
    "attractivity_integral", "direct_ground_state", "dispersion_curve", "essential_bottom",
    "variational_certificate",
]
