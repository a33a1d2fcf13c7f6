"""Numerical laboratory for the 1D quasilinear Keller-Segel system.

Simulates the coupled cell/chemoattractant system on (0, 1) with a
mass-conservative finite-volume scheme, tracks every conserved or
monotone quantity the analysis provides (mass, chemical mean, free
energy, virial identity, barrier subsolution), and evaluates explicit
finite-time blow-up certificates with a computable blow-up-time bound.
"""
from .model import (
    Grid,
    Params,
    RunOutcome,
    State,
    project_mean_zero,
    validate_initial,
)
from .diffusion import (
    ConstantDiffusion,
    DiffusionModel,
    EntropyTable,
    PowerLawDiffusion,
    TabulatedDiffusion,
    bound_samples,
    check_entropy_bound,
    check_flux_bound,
    load_tabulated,
)
from .solver import SolverConfig, elliptic_v, run, stable_dt, step, u_flux, v_rhs
from .diagnostics import (
    CumulativeState,
    DiagnosticsSeries,
    SubsolutionTracker,
    cumulative,
    cumulative_moment,
    dissipation_rate,
    h1_norm,
    liapunov,
    liapunov_lower_bound,
    subsolution_check,
    virial_residual_study,
    virial_rhs,
)
from .criterion import (
    Certificate,
    CertificateQuery,
    blowup_indicator,
    blowup_time_bound,
    certify,
    critical_mass,
    initial_energy_bound,
    initial_moment,
    moment_envelope,
    perturbation_threshold,
    scan_q,
    validate_q,
)
from .initial_data import (
    InitialSpec,
    build_initial_state,
    cosine_modes,
    edge_ramp,
    gaussian_bump,
    load_profile,
    ramp_moment_closed_forms,
    two_bump,
)
from . import errors

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
