"""Measurement-driven quantum engine cycles at desk scale.

Validated operator algebra, Kraus channels and their superoperator/Choi
representations, peripheral spectral analysis with recurrence scans, engine
cycle thermodynamics (work, injected energy, entropy budgets), and
randomized trial suites certifying the governing inequalities.
"""

from .errors import (
    ConfigParse,
    DegenerateSample,
    DimMismatch,
    EigSolverFailure,
    EngineError,
    IllConditioned,
    KrausViolation,
    LengthMismatch,
    NoRecurrenceFound,
    NonHermitianKraus,
    NotHermitian,
    NotPSD,
    NotPureMeasurementCycle,
    NotUnitary,
    ParamOutOfRange,
    TraceMismatch,
    ValidationFailure,
)
from .operators import (
    DensityOperator,
    HermitianOperator,
    Spectrum,
    energy_expectation,
    gibbs_state,
    hs_inner,
    hs_norm,
    majorizes,
    polar_decompose,
    psd_sqrt,
    spectrum_of,
    validate_density,
    validate_hermitian,
    von_neumann_entropy,
)
from .channels import (
    ChannelKind,
    ChannelReport,
    KrausChannel,
    Superoperator,
    apply,
    bare_measurement,
    choi_matrix,
    classify,
    classify_superoperator,
    compose,
    feedback_from_measurement,
    general_measurement,
    partial_thermalization,
    polar_split,
    sample_random_bare_measurement,
    sample_random_density,
    sample_random_unitary,
    superoperator_to_choi,
    to_superoperator,
    unitary_channel,
    unvec,
    vec,
)
from .spectral import (
    PeripheralDecomposition,
    RecurrenceRecord,
    cesaro_projector,
    find_recurrences,
    fixed_points,
    peripheral_projector,
    project_peripheral,
    spectrum,
)
from .engine import (
    CycleLedger,
    EngineCycle,
    EngineStep,
    EntropyBudget,
    FirstLawReport,
    StepRecord,
    build_cycle,
    cycle_superoperator,
    entropy_budget,
    entropy_of_disturbance,
    first_law_report,
    information_gain,
    run,
    sample_random_bare_cycle,
    scenario,
    scenario_initial_state,
)
from .verify import (
    SUITES,
    TrialReport,
    commutator_identity_residual,
    reevaluate_witness,
    run_suite,
    verify_commutator_identity,
    verify_half_contractivity,
    verify_majorization_step,
    verify_monotonicity,
    verify_no_go,
    verify_nondisturbance_equivalence,
)

__version__ = "0.1.0"
