"""specsplit: spectral splitting of dense complex operators along the
imaginary axis.

The toolkit computes the invariant-subspace projections of an operator whose
spectrum avoids a strip around the imaginary axis, in two independent ways:
vertical-line resolvent contour integrals (the construction under study) and
an ordered Schur decomposition (the oracle).  On top of that it verifies the
algebra the projections must satisfy, fits resolvent decay laws, and measures
how the splitting behaves under perturbations.
"""

from .analysis import (
    HalfplaneCheck,
    ParabolaProbe,
    SectorialityCheck,
    SplitResult,
    SweepReport,
    axis_grid,
    block_commutant_check,
    halfplane_bound_check,
    m_subspace,
    multiset_match_distance,
    opposite_halfplane_grid,
    parabola_probe,
    resolvent_sweep,
    sectoriality_report,
    split,
    subspace_angle,
)
from .contour import (
    ContourSpec,
    QuadResult,
    contour_shift_check,
    default_contour,
    integrate_A,
    integrate_B,
    pv_axis_integral,
    r_minus,
)
from .corpus import (
    Budget,
    CaseReport,
    CorpusCase,
    case_names,
    corpus_almbisect,
    corpus_mcintosh_yagi,
    corpus_unbproj,
    make_case,
    run_case,
    sylvester_diag_solve,
)
from .errors import (
    NearSpectrumError,
    OperatorError,
    QuadratureError,
    SlowDecayWarning,
    SplittingMismatchError,
    TruncationError,
)
from .operators import (
    Operator,
    ProjectionPair,
    Spectrum,
    build_block_operator,
    choose_h,
    dense_operator,
    descriptor_of,
    diag_operator,
    family_names,
    operator_from_descriptor,
    oracle_projection,
    random_gap_operator,
    resolvent,
    resolvent_many,
    resolvent_norms,
    spectral_norm,
    spectrum,
)
from .perturbation import (
    CorollaryVerdict,
    DomainEchoReport,
    PerturbReport,
    corollary_check,
    domain_counterexample,
    hamiltonian_assemble,
    hamiltonian_pairing_defect,
    p_subordination_fit,
    perturb_pair_report,
    projection_diff_integral,
    resolvent_diff_decay,
    subordination_curve,
)

__version__ = "0.1.0"
