"""convexfit: estimate a compact convex set from noisy support-function data."""

from .assouad import (
    AssouadFamily,
    build_assouad_family,
    cap_loss_cell,
    cap_loss_scaling,
    loss_between_labels,
    unit_cap_loss,
)
from .estimators import (
    FitResult,
    MeasurementSet,
    QPSettings,
    SieveConfig,
    choose_m,
    fit_ls_2d,
    fit_ls_full,
    fit_ls_net,
    fit_sieve_polytope,
)
from .geometry import (
    Cap,
    CapBody,
    Polytope,
    SupportSamples,
    hausdorff_polytopes,
    loss_f,
    loss_new,
    loss_r_mc,
    project_point_to_polytope,
    support_cap_body,
    support_polytope,
    support_samples,
    support_values,
)
from .harness import (
    ExperimentSpec,
    RateFit,
    RiskEstimate,
    benchmark_truths,
    estimate_risk,
    fit_rate,
    generate_data,
    rate_exponent,
    risk_curve,
)
from .sieve import active_backend
from .spheres import (
    PackingSet,
    cap_measure_mc,
    count_packing_in_cap,
    evenly_spaced_circle,
    maximal_packing,
    uniform_direction,
    uniform_directions,
)

__version__ = "0.1.0"

__all__ = [
    "AssouadFamily", "Cap", "CapBody", "ExperimentSpec", "FitResult",
    "MeasurementSet", "PackingSet", "Polytope", "QPSettings", "RateFit",
    "RiskEstimate", "SieveConfig", "SupportSamples", "active_backend",
    "benchmark_truths", "build_assouad_family", "cap_loss_cell",
    "cap_loss_scaling", "cap_measure_mc", "choose_m", "count_packing_in_cap",
    "estimate_risk", "evenly_spaced_circle", "fit_ls_2d", "fit_ls_full",
    "fit_ls_net", "fit_rate", "fit_sieve_polytope", "generate_data",
    "hausdorff_polytopes", "loss_between_labels", "loss_f", "loss_new",
    "loss_r_mc", "maximal_packing", "project_point_to_polytope",
    "rate_exponent", "risk_curve", "support_cap_body", "support_polytope",
    "support_samples", "support_values", "unit_cap_loss",
    "uniform_direction", "uniform_directions",
]
