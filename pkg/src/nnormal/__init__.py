"""Exact similarity invariants for finite atomic models of n-normal operators."""

__version__ = "0.1.0"

from .scalars import Rational, Scalar
from .measure import Cell, Partition, StepFunction, pushforward, refine_common
from .linalg import Matrix, jordan_structure, similarity_transform
from .model import (MultiplicityInput, OperatorModel, TriangularBlock, assemble, direct_sum,
                    fiber, validate)
from .canonical import (are_similar, canonicalize, decompose_by_multiplicity, identity_class,
                        k0_invariant, r_function, signature)
from .commutant import (CommutantElement, NotMaximal, commutant_basis, extract_skeleton,
                        intertwiner_basis, normalize_idempotent, semisimple_projection,
                        standard_family, standardize_family, trace_r)
from .oracle import oracle_intertwiner_dim, oracle_similar

__all__ = [
    "Rational", "Scalar", "Cell", "Partition", "StepFunction", "pushforward", "refine_common",
    "Matrix", "jordan_structure", "similarity_transform",
    "MultiplicityInput", "OperatorModel", "TriangularBlock", "assemble", "direct_sum", "fiber",
    "validate", "are_similar", "canonicalize", "decompose_by_multiplicity", "identity_class",
    "k0_invariant", "r_function", "signature", "CommutantElement", "NotMaximal",
    "commutant_basis", "extract_skeleton", "intertwiner_basis", "normalize_idempotent",
    "semisimple_projection", "standard_family", "standardize_family", "trace_r",
    "oracle_intertwiner_dim", "oracle_similar",
]
