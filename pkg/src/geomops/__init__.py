"""Chart-local operators generated by general geometric structures."""

__version__ = "0.1.0"

from .box import Box
from .calculus import (
    bracket,
    bracket_skew,
    bracket_sym,
    directional_derivative,
    grad_left,
    grad_right,
    hamilton_poisson_field,
    leibniz_field_sym,
)
from .errors import (
    DimensionError,
    EvalDomainError,
    ExprSyntaxError,
    FlowBlowupError,
    GeomOpsError,
    OrderError,
    PreconditionError,
    SingularMatrixError,
)
from .exprlang import parse
from .fields import DiffeoMap, MatrixField, ScalarField, VectorField, compose, matrix, scalar, vector
from .measure import (
    VolumeForm,
    divergence,
    laplace_left,
    laplace_right,
    lebesgue,
    liouville_volume,
    rescale_volume,
    riemannian_volume,
)
from .structure import GeometricStructure, adjoint_left, adjoint_right, geometric_pair, structure

__all__ = [
    "__version__",
    "Box",
    "bracket",
    "bracket_skew",
    "bracket_sym",
    "directional_derivative",
    "grad_left",
    "grad_right",
    "hamilton_poisson_field",
    "leibniz_field_sym",
    "DimensionError",
    "EvalDomainError",
    "ExprSyntaxError",
    "FlowBlowupError",
    "GeomOpsError",
    "OrderError",
    "PreconditionError",
    "SingularMatrixError",
    "parse",
    "DiffeoMap",
    "MatrixField",
    "ScalarField",
    "VectorField",
    "compose",
    "matrix",
    "scalar",
    "vector",
    "VolumeForm",
    "divergence",
    "laplace_left",
    "laplace_right",
    "lebesgue",
    "liouville_volume",
    "rescale_volume",
    "riemannian_volume",
    "GeometricStructure",
    "adjoint_left",
    "adjoint_right",
    "geometric_pair",
    "structure",
]
