"""Counterdiabatic driving and Kibble-Zurek quench toolkit for the
transverse-field Ising chain."""

from .coefficients import (
    CdConfig,
    CoeffMode,
    FilterKind,
    cd_coefficient_analytic,
    cd_coefficient_exact,
    filter_weight,
    truncated_kernel,
)
from .engine import (
    Composition,
    DriverConfig,
    QuenchProtocol,
    SpectrumResult,
    SweepCell,
    cd_variance,
    count_spectral_lobes,
    crossover_branch,
    evolve_mode,
    excitation_density,
    excitation_probability,
    fidelity_susceptibility,
    run_spectrum,
    sweep,
)
from .integrate import IntegrationError, StepSizeUnderflow, solve_ode
from .momentum import (
    BlochVector,
    ChainSpec,
    ModeState,
    bloch_vector,
    cd_kernel_exact,
    free_fermion_cd,
    ground_energy,
    mode_energy,
    mode_excited_state,
    mode_ground_state,
    mode_hamiltonian,
    momentum_grid,
)
from .twolevel import (
    DegeneracyError,
    LzParams,
    NormDriftError,
    TwoLevelDriver,
    TwoLevelState,
    evolve_two_level,
    excited_state,
    ground_state,
    instantaneous_eigenbasis,
    lz_cd_term,
    lz_hamiltonian,
    state_fidelity,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
