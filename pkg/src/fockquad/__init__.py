"""Truncated field quadratures in the Fock basis.

Spectra of the truncated position quadrature (zeros of Hermite
polynomials), the pseudo-eigenstates attached to arbitrary real values,
Christoffel-Darboux kernels and their complex zeros, and finite evidence
for the density of the truncated spectra.
"""

from .errors import ConvergenceError
from .hermite import (
    RootSet,
    discrete_orthogonality_check,
    eval_hermite_function,
    eval_hermite_sequence,
    hermite_functions,
    hermite_roots,
)
from .cdkernel import (
    ComplexRootSet,
    KernelEvaluation,
    complex_zeros,
    kernel,
    kernel_poly_coefficients,
    laurent_coefficient,
    zero_structure_report,
)
from .limits import (
    LimitQuery,
    ProximityCertificate,
    find_near_eigenvalue,
    phase_limit_density,
    phase_spectrum,
    spacing_estimate,
    spectrum_limit_density,
)
from .pseudo import (
    MomentReport,
    NormalizationMode,
    PseudoEigenstate,
    build_state,
    d_approx_oscillatory,
    d_approx_quadratic,
    d_measure,
    d_measure_logform,
    d_measure_ratio,
    expectation_approx,
    expectation_xi,
    inner_product,
    matrix_element_xi,
    special_state_residual,
    variance_full,
    variance_full_approx,
    variance_truncated,
    variance_truncated_approx,
    wavefunction,
)
from .quadrature import (
    EigenDecomposition,
    TruncatedQuadrature,
    build,
    cayley_hamilton_residual,
    charpoly_value,
    diagonalize,
    minimal_polynomial_check,
    projector_kernel,
)
from .scaled import ScaledReal

__version__ = "0.1.0"
