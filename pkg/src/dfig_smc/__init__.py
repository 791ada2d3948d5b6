"""Sliding-mode torque control of a doubly-fed induction generator.

Library layout:

- ``plant``       dq machine model, coefficients, torque, references
- ``multimodel``  linearized sub-models, validities, fusion
- ``controllers`` sliding surfaces and the three control laws
- ``stability``   gain bounds, Lyapunov certificates, reaching monitor
- ``engine``      fixed-step closed-loop simulation and metrics
- ``config``      scenario configuration parsing/serialization
- ``report``      trace CSV, comparison reports, figures
- ``cli``         command-line entry point
"""

from __future__ import annotations

__version__ = "0.1.0"

from .plant import (  # noqa: F401
    DerivedCoeffs,
    MachineParams,
    PlantInput,
    PlantState,
    ReferenceState,
    derive_coefficients,
    electromagnetic_torque,
    em_input_matrix,
    em_state_matrix,
    plant_derivative,
    reference_state,
)

from .multimodel import (  # noqa: F401
    SubModel,
    compute_validities,
    fuse_controls,
    fuse_surfaces,
    linearize_submodel,
)

from .controllers import (  # noqa: F401
    ControllerConfig,
    FusionStep,
    SurfaceSpec,
    equivalent_control,
    saturation_control,
    sliding_surface,
    smc1_control,
    smc2_control,
    smmc_control,
    switching_control,
)

from .stability import (  # noqa: F401
    NonlinearBound,
    ReachingReport,
    StabilityCertificate,
    certify_bank,
    full_order_feedback,
    gain_bound,
    lyapunov_check,
    nonquadratic_V,
    reaching_monitor,
    regular_form_reduction,
)

from .signals import (  # noqa: F401
    PiecewiseSignal,
    constant,
    piecewise,
    step,
)

from .engine import (  # noqa: F401
    BankSpec,
    Metrics,
    Scenario,
    SimTrace,
    build_bank,
    compute_metrics,
    default_scenario,
    integrate_plant,
    resolve_bank_gains,
    run_scenario,
)

from .config import (  # noqa: F401
    RunConfig,
    controller_preset,
    parse_config,
    serialize_config,
)

from .report import (  # noqa: F401
    ComparisonReport,
    check_stability,
    compare_controllers,
    read_trace_csv,
    run_report,
    write_trace_csv,
)
