"""Pseudo-spectral tools for the Zakharov-Kuznetsov equation on the torus."""
__version__ = "0.1.0"

from .spectral import (  # noqa: E402
    Grid, RealField, SpectralField, SymmetryError, analyze, bump, dealias,
    dispersion_symbol, l2_norm, lp_project, propagate, smooth_cutoff,
    sobolev_norm, synthesize,
)
from .solver import (  # noqa: E402
    BlowUpError, InvariantRecord, SolverConfig, Trajectory, gT_diagnostic,
    hs_growth_check, invariants, nonlinear_term, solve, step,
)
from .resonance import (  # noqa: E402
    ResonanceQuadruple, curvature, enumerate_resonances, resonance, sqrt3_family_value,
)
from .approx import ApproxSolutionParams, build, residual, residual_norm_scan  # noqa: E402
from .strichartz import (  # noqa: E402
    EnsembleSpec, KernelProbe, airy_profile, commutator_test, kernel_direct,
    kernel_poisson, short_time_strichartz,
)

__all__ = [
    "Grid", "RealField", "SpectralField", "SymmetryError", "analyze", "synthesize",
    "bump", "dealias", "dispersion_symbol", "l2_norm", "lp_project", "propagate",
    "smooth_cutoff", "sobolev_norm", "BlowUpError", "InvariantRecord", "SolverConfig",
    "Trajectory", "gT_diagnostic", "hs_growth_check", "invariants", "nonlinear_term",
    "solve", "step", "ResonanceQuadruple", "curvature", "enumerate_resonances",
    "resonance", "sqrt3_family_value", "ApproxSolutionParams", "build", "residual",
    "residual_norm_scan", "EnsembleSpec", "KernelProbe", "airy_profile",
    "commutator_test", "kernel_direct", "kernel_poisson", "short_time_strichartz",
]
