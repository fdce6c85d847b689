"""symkit: exact computation of generalized PDE symmetries.

Everything is computed over the Gaussian rationals with arbitrary-precision
arithmetic; there is no floating point anywhere in the core.
"""

from .errors import (
    CapTooSmallWarning,
    ClosureViolation,
    DslSyntaxError,
    IrrationalEigenvalue,
    NonSquare,
    NotCommuting,
    NotNilpotentAtLambda,
    NotSolvedForm,
    OrderOverflow,
    SemanticError,
    SpanMismatch,
    SymkitError,
    VariableMismatch,
)
from .field import GaussRat, I, ONE, ZERO, as_gauss
from .jet import (
    GenVectorField,
    JetContext,
    PdeSystem,
    apply_on_solutions,
    evolution_determining_solve,
    is_symmetry,
    lie_bracket,
    pr_apply,
    prolong,
    total_derivative,
)
from .linalg import (
    Block,
    BlockDecomposition,
    ExactMatrix,
    UniPoly,
    block_exp,
    common_decompose,
    kernel_rows,
    qi_roots,
    rref_rows,
)
from .linop import (
    LinDiffOp,
    OperatorPde,
    commutator,
    compose,
    operator_determining_solve,
)
from .poly import Context, ExpPoly, MultiPoly, Var
from .structure import (
    DimensionReport,
    StructuredBasis,
    SymmetrySpace,
    adjoint_matrix,
    ansatz_dimensions,
    structured_basis,
)

__version__ = "0.1.0"
