"""Spatial active noise control with kernel-interpolated sound fields.

Simulation toolkit for feedforward spatial ANC over a cuboid target region:
a free-field acoustic forward model, directional reproducing kernels for
sound-field interpolation, NLMS controllers that minimize the interpolated
region energy (with the primary and secondary fields interpolated either
jointly or individually), and an experiment harness reproducing convergence,
frequency-sweep and source-perturbation studies.
"""

__version__ = "0.1.0"

from .acoustics import Wavenumber, green, primary_field, total_field, transfer_matrix
from .adaptive import (
    IndividualKiNlms,
    MpcNlms,
    NlmsParams,
    TotalKiNlms,
    cost_individual,
    cost_total,
    decompose_error,
    drive,
    spectral_norm,
    update_individual_ki,
    update_total_ki,
)
from .geometry import (
    Cuboid,
    SampleSet,
    Scenario,
    build_paper_scenario,
    direction_to,
    eval_grid,
    monte_carlo_samples,
    paper_region,
    perturb_primary_source,
)
from .harness import (
    MethodSpec,
    PerturbationStds,
    RunConfig,
    RunResult,
    convergence_runs,
    frequency_sweep,
    p_red,
    paper_methods,
    perturbation_study,
    run_adaptation,
)
from .kernel import (
    GramMatrix,
    IndividualFilters,
    InterpMatrices,
    KernelParams,
    estimate_fields,
    gram,
    individual_filters,
    interp_filter,
    interp_filter_matrix,
    interp_matrices_individual,
    interp_matrix_total,
    kappa,
    kappa_matrix,
    kappa_sphere_oracle,
)
