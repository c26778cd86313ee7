"""Exceptional-surface topology of a lossy three-band model.

Library layers:
  models        Hamiltonian families and their analytic derivatives
  eigensystem   biorthogonal decomposition, closed-form cubic, band matching
  geometry      quantum geometric tensor and the metric three-form
  invariants    hypersphere flux, multi-loop phases, spectral winding
  spectra       point classification, scan datasets, trimer-chain metrics
  dynamics      circuit simulation and the fitted measurement pipeline
  cli           dataset command-line front end
"""

__version__ = "0.1.0"

from .errors import (
    AmbiguousMatch,
    BranchAmbiguity,
    ConfigError,
    DefectivePair,
    EPOnPath,
    ExsurfError,
    GridHitsEP,
    NearDegenerate,
    NegativeDeterminant,
    NoClosure,
    RefOnSpectrum,
    SingularStateMatrix,
    StencilCrossesEP,
    TruncationViolation,
    VanishingProjection,
)
from .gellmann import GELL_MANN, IDENTITY, commutator, gell_mann
from .models import (
    BerryLoopSpec,
    ESPoint,
    SSH3Params,
    TwoLevelLoopSpec,
    TwoLevelParams,
    build_h_berry,
    build_h_es,
    build_h_twolevel,
    build_ssh3_bloch,
    build_ssh3_chain,
    dh_es,
    ssh3_blocks,
)
from .eigensystem import (
    BiorthEigensystem,
    CubicInvariants,
    cubic_invariants,
    eig_biorthogonal,
    eig_closed_form_3x3,
    eigvals_closed_3x3,
    match_bands,
)
from .geometry import (
    Chart3,
    FunctionChart,
    QGTResult,
    SphereChart,
    ThreeForm,
    qgt_fd,
    qgt_sum,
    three_form,
)
from .invariants import (
    BraidResult,
    DDReport,
    DDRequest,
    WindingResult,
    berry_phase,
    berry_phase_frames,
    berry_transition_sweep,
    dd_invariant,
    dd_invariant_report,
    dd_sweep,
    spectral_winding,
)
from .spectra import (
    ClassifiedPoint,
    NHSEMetrics,
    PointClass,
    RiemannTrack,
    classify_point,
    coalescence_measure,
    ep3_detector,
    es_distance,
    es_scan,
    nhse_metrics,
    riemann_track,
    ssh3_spectrum,
)
from .dynamics import (
    CircuitParams,
    ExperimentResult,
    FitResult,
    Trajectory,
    berry_phase_experiment,
    conditional_hamiltonian,
    default_circuit,
    effective_couplings,
    evolve_conditional,
    evolve_lab_frame,
    fit_eigensystem,
    postselect,
    schedule_loop_point,
    state_matrix,
)
