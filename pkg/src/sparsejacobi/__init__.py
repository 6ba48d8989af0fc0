"""Sparse-perturbation Jacobi operators, their Christoffel-Darboux kernels and sine-kernel universality."""
from .cdkernel import KernelQuery, cd_kernel, cd_kernel_direct, kernel_grid, kernel_ratio, universality_error
from .chebyshev import SpectralPoint, m_bound, psi1, psi2, sine_target, transfer_matrix
from .errors import (
    CapExceeded,
    ConfluentNonReal,
    DegenerateDiagonal,
    EnvelopeError,
    EscapedBulkError,
    OutsideBulkError,
    ValidationFailure,
)
from .harness import (
    ExperimentConfig,
    ResultRow,
    emit_results,
    quadrature_approx,
    read_results,
    run_convergence_table,
    run_universality_sweep,
)
from .jacobi import JacobiParams, Rule, SparseSpec, eval_poly, load_spec
from .sparsifier import GapCertificate, SparsifierConfig, classify_measure, find_gap, generate_spec
from .varparam import coeffs_from_poly, kappa, single_bump_update

__version__ = "0.1.0"
