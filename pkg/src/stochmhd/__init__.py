"""Spectral Galerkin lab for a dissipative coupled fluid system driven by
degenerate stochastic forcing: exact drift evaluation, Lie-bracket
reachability analysis, and Monte Carlo verification of energy identities."""

from .errors import BlowUpError, ConfigurationError, ConstraintError, OutOfLatticeError
from .lattice import ModeLattice, build_lattice, canonical, leray_project
from .states import RealState, SpectralState, to_complex, to_real, validate
from .dynamics import (
    drift,
    drift_batched,
    energy_production,
    hessian_bilinear,
    nonlinear_breakdown,
    real_drift_F0,
    tables_for,
)
from .hormander import ClosureReport, ConstantVectorField, closure, double_bracket, verdict
from .noise import ForcingConfig, NoiseIntensity, intensity, load_forcing, sample_increments
from .integrator import EnsembleResult, IntegratorConfig, Trajectory, simulate, simulate_ensemble

__all__ = [
    "BlowUpError",
    "ClosureReport",
    "ConfigurationError",
    "ConstantVectorField",
    "ConstraintError",
    "EnsembleResult",
    "ForcingConfig",
    "IntegratorConfig",
    "ModeLattice",
    "NoiseIntensity",
    "OutOfLatticeError",
    "RealState",
    "SpectralState",
    "Trajectory",
    "build_lattice",
    "canonical",
    "closure",
    "double_bracket",
    "drift",
    "drift_batched",
    "energy_production",
    "hessian_bilinear",
    "intensity",
    "leray_project",
    "load_forcing",
    "nonlinear_breakdown",
    "real_drift_F0",
    "sample_increments",
    "simulate",
    "simulate_ensemble",
    "tables_for",
    "to_complex",
    "to_real",
    "validate",
    "verdict",
]
