"""Numerical laboratory for matter wave packets bound by a massive scalar field.

A non-relativistic matter field psi coupled to a real scalar field phi:

    i dpsi/dt + (1/2M) Lap psi - M phi psi = 0
    (Lap - d2/dt2) phi - m^2 phi = (2M/v^2) |psi|^2

The package provides the four closed-form traveling-soliton families of this
system, a spectral residual audit that checks them against the equations, a
split-step/leapfrog evolution engine (coupled, slaved-field, and free modes),
diagnostics, and a config-driven experiment runner.
"""

from .model import (
    Family,
    PhysicalParams,
    SolitonSpec,
    Grid,
    FieldState,
    ValidationReport,
    make_grid,
    validate_params,
)
from .solutions import (
    SolutionSample,
    family_coefficients,
    spec_3d_a,
    spec_3d_b,
    spec_1d_a,
    spec_1d_b,
    alpha_from_dispersion_3d_a,
    soliton_velocity_1d_b,
    phase_velocity,
    localization_length,
    family_velocity,
    sample_solution,
    closed_form_norm,
    closed_form_width,
)
from .spectral import (
    Spectrum,
    forward_transform,
    inverse_transform,
    spectral_derivative,
    laplacian,
    yukawa_invert,
    yukawa_convolve_direct,
)
from .residuals import (
    ResidualReport,
    ConvergenceCheck,
    FamilyAuditEntry,
    schrodinger_residual,
    klein_gordon_residual,
    residual_pair,
    choquard_residual,
    convergence_check,
    full_family_audit,
)
from .evolution import (
    EvolutionMode,
    StabilityError,
    BlowUpError,
    Trajectory,
    stability_limit,
    scalar_acceleration,
    evolve,
    reverse_state,
    state_from_solution,
    state_with_static_field,
    gaussian_packet,
    perturb,
)
from .diagnostics import (
    ObservableRecord,
    SeriesObserver,
    VelocityFit,
    measure,
    fit_velocity,
    free_spreading_width,
    spreading_ratio,
)
from .config import (
    SCENARIOS,
    ConfigError,
    ScenarioConfig,
    default_config,
    parse_config,
    serialize,
    apply_overrides,
)
from .artifacts import (
    write_snapshot,
    read_snapshot,
    write_observables_csv,
    read_observables_csv,
    write_plot_script,
)
from .runner import (
    CriterionCheck,
    RunReport,
    run_scenario,
)

__version__ = "0.1.0"
