"""Sparse spectral engine for PT-symmetric Hamiltonians.

Builds sparse matrix truncations of coupled non-Hermitian oscillator models
(and two finite-domain trigonometric models), computes low-lying complex
spectra with an implicitly restarted Arnoldi iteration, certifies eigenvalues
through truncation ladders, scans coupling constants for the symmetry-breaking
transition, and fits critical-frontier curves.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    BracketError,
    ConfigMismatchError,
    DomainError,
    FitFailureError,
    NumericError,
    PartialResultError,
    PtspecError,
    ResourceLimitError,
    UnknownPresetError,
)
from .hamiltonian import (  # noqa: F401
    HamiltonianSpec,
    ModeSpec,
    MonomialTerm,
    NativeTerm,
    TwoByTwoSpec,
    eigs_2x2,
    preset,
    PRESET_NAMES,
    validate_pt,
)
from .assemble import (  # noqa: F401
    BandedOperator,
    Truncation,
    assemble_any,
    assemble_sparse,
    assemble_trig,
    mode_frequency,
    single_mode_matrix,
)
from .linalg import (  # noqa: F401
    DenseMatrix,
    SparseMatrix,
    dense_eigenvalues,
    lu_solve,
    matvec,
)
from .arnoldi import (  # noqa: F401
    EigsConfig,
    KrylovFactorization,
    RitzPair,
    arnoldi_step,
    eigs,
    implicit_restart,
    lowest_eigenvalues,
)
from .spectra import (  # noqa: F401
    Classification,
    ConvergedLevel,
    Spectrum,
    classify,
    exceptional_point,
    ladder_filter,
    preset_exceptional_point,
)
from .scan import (  # noqa: F401
    CriticalEstimate,
    ScanConfig,
    ScanResult,
    critical_estimate,
    run_scan,
)
from .fit import (  # noqa: F401
    FrontierFit,
    FrontierPoint,
    fit_frontier,
    frontier,
    nested_exponent_diagnostic,
)
