"""Pseudo-density matrices of qubit processes in the Pauli basis.

Pauli order is (I, X, Y, Z). A coefficient tensor for ``k`` qubits over
``n + 1`` times has ``k * (n + 1)`` axes of length 4; axis ``s`` is qubit
``s % k`` at time ``s // k`` (time-major, qubit-minor), matching the
Kronecker order of the composite algebra.
"""
from dataclasses import dataclass

import numpy as np

from .algebra import TOL, AlgebraDescriptor, AlgebraElement, block_eigenvalues, is_selfadjoint, selfadjoint_deviation
from .channel import jamiolkowski
from .errors import NotQubitAlgebra, NotSelfAdjoint, ShapeMismatch
from .nstep import ProcessChain

PAULIS = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def pauli_string(indices) -> np.ndarray:
    """Kronecker product of the Paulis named by ``indices``."""
    out = np.ones((1, 1), dtype=complex)
    for a in indices:
        if a not in (0, 1, 2, 3):
            raise ShapeMismatch(f"Pauli index {a!r} not in 0..3")
        out = np.kron(out, PAULIS[a])
    return out


def _qubit_count(algebra) -> int:
    d = algebra.dim
    if len(algebra.dims) != 1 or d < 2 or d & (d - 1):
        raise NotQubitAlgebra(f"{algebra} is not a single matrix block of dimension 2**k")
    return d.bit_length() - 1


def pdo_recursive(chain: ProcessChain) -> AlgebraElement:
    """``R_1 = Jor(rho (x) 1, J[E_1])``, ``R_m = Jor(R_{m-1} (x) 1, 1 (x) J[E_m])``."""
    ks = {_qubit_count(a) for a in chain.algebras}
    if len(ks) != 1:
        raise NotQubitAlgebra("every time slice must carry the same number of qubits")
    d = chain.rho.algebra.dim
    p = np.kron(chain.rho.matrix, np.eye(d))
    j = jamiolkowski(chain.channels[0]).matrix
    r = 0.5 * (p @ j + j @ p)
    for e in chain.channels[1:]:
        left = np.kron(r, np.eye(d))
        right = np.kron(np.eye(r.shape[0] // d), jamiolkowski(e).matrix)
        r = 0.5 * (left @ right + right @ left)
    composite = chain.factorization.composite
    return AlgebraElement(composite, r)


def _interleave(m: np.ndarray, slots: int) -> np.ndarray:
    # (i_1..i_s, j_1..j_s) -> axes (i_1 j_1, ..., i_s j_s) merged into length-4 axes
    t = m.reshape([2] * (2 * slots))
    order = [ax for s in range(slots) for ax in (s, s + slots)]
    return t.transpose(order).reshape([4] * slots)


def _deinterleave(t: np.ndarray, slots: int) -> np.ndarray:
    t = t.reshape([2] * (2 * slots))
    order = list(range(0, 2 * slots, 2)) + list(range(1, 2 * slots, 2))
    return t.transpose(order).reshape(2 ** slots, 2 ** slots)


def _mode_product(t: np.ndarray, op: np.ndarray) -> np.ndarray:
    for ax in range(t.ndim):
        t = np.moveaxis(np.tensordot(op, t, axes=([1], [ax])), 0, ax)
    return t


def pauli_coefficients(t: AlgebraElement, k: int, n: int) -> np.ndarray:
    """``c[a_1..a_m] = tr(t * sigma_{a_1} (x) ... (x) sigma_{a_m})`` with ``m = k (n + 1)``."""
    slots = k * (n + 1)
    if t.algebra.dim != 2 ** slots:
        raise ShapeMismatch(f"dimension {t.algebra.dim} is not 2**{slots}")
    # tr(t sigma) = sum_ij t_ij sigma_ji
    op = PAULIS.transpose(0, 2, 1).reshape(4, 4)
    c = _mode_product(_interleave(t.matrix, slots), op)
    return c


def pdo_from_coefficients(coeffs, k: int, n: int, algebra: AlgebraDescriptor = None) -> AlgebraElement:
    """``2**-m sum_a c[a] sigma_a``, inverting ``pauli_coefficients``.

    The result lives on ``algebra`` when given (it must be a single block of
    the right size), otherwise on a fresh ``M_{2**m}``.
    """
    slots = k * (n + 1)
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape != (4,) * slots:
        raise ShapeMismatch(f"coefficient tensor must have shape {(4,) * slots}")
    op = PAULIS.reshape(4, 4).T
    m = _deinterleave(_mode_product(coeffs, op), slots) / 2 ** slots
    return AlgebraElement(algebra or AlgebraDescriptor.matrix(2 ** slots), m)


@dataclass(frozen=True)
class Negativity:
    min_eigenvalue: float
    negativity: float


def negativity_witness(t: AlgebraElement, tol: float = TOL) -> Negativity:
    """Smallest eigenvalue and the summed magnitude of the negative eigenvalues."""
    if not is_selfadjoint(t, tol):
        raise NotSelfAdjoint("negativity needs a self-adjoint element", deviation=selfadjoint_deviation(t))
    ev = block_eigenvalues(t)
    return Negativity(float(ev.min()), float(-ev[ev < 0].sum()))


def coefficients_to_json(coeffs, k: int, n: int) -> dict:
    """Flat row-major coefficients; ``coeffs_im`` appears only for non-real tensors."""
    c = np.asarray(coeffs, dtype=complex).reshape(-1)
    out = {"k": int(k), "n": int(n), "coeffs": c.real.tolist()}
    if np.any(c.imag != 0):
        out["coeffs_im"] = c.imag.tolist()
    return out


def coefficients_from_json(data) -> tuple:
    """Inverse of ``coefficients_to_json``: ``(coeffs, k, n)``."""
    k, n = int(data["k"]), int(data["n"])
    c = np.asarray(data["coeffs"], dtype=float) + 1j * np.asarray(data.get("coeffs_im", 0.0), dtype=float)
    if c.size != 4 ** (k * (n + 1)):
        raise ShapeMismatch(f"expected {4 ** (k * (n + 1))} coefficients, got {c.size}")
    return c.reshape((4,) * (k * (n + 1))), k, n
