"""Row exchangeable arrays: simulation, estimation, and exact inference.

The package is organized around the hierarchy generator -> row
distribution -> cell: `measures` holds the finite measure types and
metrics, `representation` the seeded uniform machinery and
representation-function samplers, `hiermodel` the finite hierarchical
models, `inference` the exact posterior/predictive computations with a
brute-force oracle, `diagnostics` the statistical verification harness,
and `cli` the batch front end.
"""

from ._backend import HAS_NUMBA, using_numba
from .errors import (
    DomainError,
    InferenceError,
    InputError,
    ResourceError,
    RowexError,
)
from .measures import (
    Alphabet,
    MeasureOnPMFs,
    PMF,
    empirical_generator,
    empirical_row_distribution,
    pmf_metric_on_simplex,
    prohorov_distance,
    total_variation,
)
from .representation import (
    CollapsedRepFunction,
    TableRepFunction,
    UniformStream,
    UnitUniform,
    collapse,
    digit,
    sample_array_rep,
    sample_array_separate,
    split_uniform,
)
from .hiermodel import (
    HierModel,
    LatentAssignment,
    ObservationArray,
    builtin_models,
    rep_from_model,
    sample_hierarchical,
    validate_model,
)
from .inference import (
    PosteriorReport,
    PredictiveCell,
    PredictiveQuery,
    RowPosterior,
    generator_posterior,
    joint_mu_posterior,
    likelihood_given_mus,
    markov_discrepancy,
    oracle_joint,
    predictive,
    row_posterior_chain,
)
from .diagnostics import (
    ColumnDependentSampler,
    HierarchicalArraySampler,
    RepresentationArraySampler,
    TestReport,
    chi_square_two_sample,
    convergence_curve,
    exchangeability_test,
    lln_check,
    sampler_equivalence,
)

__version__ = "0.1.0"
