"""Four-dimensional rank-2 Poisson structures: construction, validation,
classification, Casimir invariants, global Darboux reduction, 3D leaf
reduction, and invariant-monitored integration."""

from .casimir import (
    CasimirPair,
    YCoordinates,
    casimirs_case1,
    casimirs_case_iia,
    casimirs_case_iib_generic,
    casimirs_for,
    casimirs_nongeneric,
    prepare_structure,
    verify_casimir,
)
from .darboux import (
    CoordMap,
    DarbouxPipeline,
    build_pipeline,
    pushforward_matrix,
    reparametrized_vector_field,
    verify_pipeline,
    y_map,
)
from .dynamics import PoissonSystem, Trajectory, integrate, integrate_reparametrized
from .exprlang import (
    Expr,
    ExprDomainError,
    ExprError,
    ExprSyntaxError,
    UnivariateFn,
    antiderivative,
    differentiate,
    evaluate,
    parse,
    to_string,
)
from .fileio import LoadedStructure, load_structure
from .gallery import GALLERY, load_gallery_entry
from .normal_form import SigmaFactors, factor_sigma, sigma_positive_normalize
from .reduce3d import ThreeDStructure, is_separable, jacobi3_residual, leaf_reduce
from .structure import (
    BoxDomain,
    CaseLabel,
    FamilyStructure,
    MatrixField,
    SigmaSet,
    bracket_obstruction,
    check_hypotheses,
    check_sigma_compatibility,
    classify,
    evaluate_matrix,
    jacobi_residual,
    rank_and_determinant,
)

__version__ = "0.1.0"

__all__ = [
    "BoxDomain",
    "CasimirPair",
    "CaseLabel",
    "CoordMap",
    "DarbouxPipeline",
    "Expr",
    "ExprDomainError",
    "ExprError",
    "ExprSyntaxError",
    "FamilyStructure",
    "GALLERY",
    "LoadedStructure",
    "MatrixField",
    "PoissonSystem",
    "SigmaFactors",
    "SigmaSet",
    "ThreeDStructure",
    "Trajectory",
    "UnivariateFn",
    "YCoordinates",
    "antiderivative",
    "bracket_obstruction",
    "build_pipeline",
    "casimirs_case1",
    "casimirs_case_iia",
    "casimirs_case_iib_generic",
    "casimirs_for",
    "casimirs_nongeneric",
    "check_hypotheses",
    "check_sigma_compatibility",
    "classify",
    "differentiate",
    "evaluate",
    "evaluate_matrix",
    "factor_sigma",
    "integrate",
    "integrate_reparametrized",
    "is_separable",
    "jacobi3_residual",
    "jacobi_residual",
    "leaf_reduce",
    "load_gallery_entry",
    "load_structure",
    "parse",
    "prepare_structure",
    "pushforward_matrix",
    "rank_and_determinant",
    "reparametrized_vector_field",
    "sigma_positive_normalize",
    "to_string",
    "verify_casimir",
    "verify_pipeline",
    "y_map",
]
