"""Sampling-pattern design and sparse recovery on the sphere and SO(3)."""

from .coherence import (
    CoherenceReport,
    detect_modular_symmetry,
    elevation_lower_bound,
    gram_via_3j,
    legendre_pair_bound,
    mutual_coherence,
    welch_bound,
)
from .optimize import (
    OptimizerConfig,
    OptimizerTrace,
    evaluate_candidate,
    multistart_pattern_search,
    pattern_search,
)
from .patterns import (
    S2,
    SO3,
    SamplePoint,
    SamplingPattern,
    equispaced_elevation,
    is_cosine_symmetric,
    load_pattern,
    random_pattern,
    regenerate,
    regular_pattern,
    save_pattern,
)
from .recover import (
    QCBPOptions,
    RecoveryProblem,
    RecoveryResult,
    SparseSignalSpec,
    omp_solve,
    phase_transition,
    qcbp_solve,
)
from .sensing import (
    BasisEnumeration,
    SensingMatrix,
    basis_dimension,
    build_matrix,
    enumerate_basis,
    precondition_rhs,
)
from .specfun import (
    BasisIndex,
    JacobiParams,
    assoc_legendre,
    jacobi,
    spherical_harmonic,
    wigner3j,
    wigner_D,
    wigner_d,
)

__version__ = "0.1.0"
