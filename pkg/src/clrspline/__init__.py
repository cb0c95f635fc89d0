"""Bivariate density estimation via zero-integral tensor spline smoothing.

Histogram data is mapped into the space of zero-integral functions by
the centred log-ratio transform, smoothed there with a penalized
tensor-product spline whose basis integrates to zero by construction,
and mapped back to a positive unit-integral density. Fitted splines
decompose exactly into an interaction part and an independent part built
from the two clr marginals.
"""

from .clr import (
    ClrField,
    Density1D,
    DensityGrid,
    HistogramGrid,
    clr_density,
    discrete_clr,
    geometric_marginals,
    grid_integral,
    inv_clr,
    ise,
    perturb,
    power,
)
from .decomposition import (
    DecompositionResult,
    MarginalReport,
    decompose,
    independent_coeffs,
    interaction_coeffs,
    marginal_check,
    orthogonality_check,
    part_norms,
)
from .exceptions import (
    ClrSplineError,
    ConfigError,
    EnvelopeError,
    MeshMismatchError,
    ParseError,
    RankDeficiencyError,
    SchoenbergWhitneyError,
    SmoothingConditionError,
)
from .ingest import (
    SampleSet,
    build_histogram,
    impute_zeros,
    read_coeffs,
    read_grid,
    read_histogram,
    read_samples,
    write_coeffs,
    write_grid,
    write_histogram,
    write_samples,
)
from .knots import (
    ExtendedKnots,
    KnotConfig,
    derivative_transform,
    eval_bspline_basis,
    extend_knots,
    gram_matrix,
    reduce_degree,
    span_quadrature,
)
from .simulate import (
    BetaParams,
    GcvStudy,
    SweepResult,
    accept_reject,
    beta_density,
    cell_centers,
    estimate_envelope,
    run_bin_sweep,
    run_gcv_study,
    run_knot_sweep,
    study_spec,
)
from .smoother import (
    BCoeffs,
    FitResult,
    PenaltyConfig,
    ScanResult,
    SWReport,
    TensorBasisSpec,
    ZBCoeffs,
    assemble_design,
    assemble_penalty,
    eval_derivative,
    eval_spline,
    fit,
    gcv_scan,
    hat_matrix,
    validate_sw,
    zb_to_b,
)
from .zbbasis import difference_matrix, eval_zb_basis, scale_matrix, zb_map, zb_transform

__version__ = "0.1.0"
