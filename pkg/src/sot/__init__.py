"""States over time: pseudo-density operators of quantum processes and their inversion."""
from .algebra import (
    TOL,
    AlgebraDescriptor,
    AlgebraElement,
    TensorFactorization,
    extended_jordan,
    jordan_product,
    multiplication_dual_unit,
    partial_trace,
    tensor_elements,
)
from .bloom import LEFT, RIGHT, SYMMETRIC, BloomKind, bloom_apply, bloom_as_map
from .channel import SuperOperator, apply, choi_matrix, compose, jamiolkowski, jamiolkowski_inverse
from .extract import extract_process, in_T_star_chain, is_pdo, solve_sylvester
from .nstep import ProcessChain, bloom_paren, catalan_enumerate, yinyang
from .qubit_pdo import negativity_witness, pauli_coefficients, pdo_recursive

__version__ = "0.1.0"
