"""Multi-matrix algebras and their elements.

An algebra ``M_{m_1} + ... + M_{m_k}`` is stored as a block-diagonal
subalgebra of ``M_d`` with ``d = m_1 + ... + m_k``. Each block owns a fixed
set of indices of the ambient space (its *layout*). Elements are kept as a
single dense ``d x d`` complex matrix whose off-block entries are zero, so
products, Kronecker products and partial traces of the ambient matrices are
exactly the multi-matrix operations.

Kronecker convention: the leftmost tensor factor is the slowest index.
"""
from dataclasses import dataclass
from functools import cached_property, lru_cache, reduce
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .errors import AlgebraMismatch, EmptyList, IndexOutOfRange, NumericalFailure, ShapeMismatch

TOL = 1e-9


def _join(parts):
    return parts[0] if len(parts) == 1 else "(" + ",".join(parts) + ")"


class AlgebraDescriptor:
    """Ordered list of ``(label, dim)`` blocks plus their ambient layout."""

    __slots__ = ("_keys", "dims", "layout", "dim", "__weakref__")

    def __init__(self, blocks: Iterable, layout=None):
        keys, dims = [], []
        for label, dim in blocks:
            key = label if isinstance(label, tuple) else (str(label),)
            if int(dim) != dim or dim < 1:
                raise ShapeMismatch(f"block dimension must be a positive integer, got {dim!r}")
            keys.append(key)
            dims.append(int(dim))
        if not keys:
            raise EmptyList("an algebra needs at least one block")
        labels = [_join(k) for k in keys]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate block labels: {labels}")
        if layout is None:
            offsets = np.cumsum([0] + dims)
            layout = [tuple(range(offsets[i], offsets[i + 1])) for i in range(len(dims))]
        layout = tuple(tuple(int(i) for i in idx) for idx in layout)
        if [len(idx) for idx in layout] != dims:
            raise ShapeMismatch("layout does not match block dimensions")
        if sorted(i for idx in layout for i in idx) != list(range(sum(dims))):
            raise ShapeMismatch("layout must partition the ambient index set")
        self._keys = tuple(keys)
        self.dims = tuple(dims)
        self.layout = layout
        self.dim = sum(dims)

    @classmethod
    def matrix(cls, dim: int, label: str = "0") -> "AlgebraDescriptor":
        """Full matrix algebra ``M_dim``."""
        return cls([(label, dim)])

    @classmethod
    def classical(cls, labels) -> "AlgebraDescriptor":
        """Commutative algebra ``C^X``; ``labels`` may be a count or a label list."""
        if isinstance(labels, int):
            labels = range(labels)
        return cls([(str(x), 1) for x in labels])

    @property
    def labels(self) -> tuple:
        return tuple(_join(k) for k in self._keys)

    @property
    def blocks(self) -> tuple:
        return tuple(zip(self.labels, self.dims))

    @property
    def is_classical(self) -> bool:
        return all(d == 1 for d in self.dims)

    def tensor(self, other: "AlgebraDescriptor") -> "AlgebraDescriptor":
        blocks, layout = [], []
        for (ka, la), (kb, lb) in product(zip(self._keys, self.layout), zip(other._keys, other.layout)):
            blocks.append((ka + kb, len(la) * len(lb)))
            layout.append(tuple(i * other.dim + j for i in la for j in lb))
        return AlgebraDescriptor(blocks, layout)

    def mask(self) -> np.ndarray:
        """Boolean ``d x d`` mask of entries allowed to be nonzero (read-only, cached)."""
        return _mask(self)

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise AlgebraMismatch(f"no block labelled {label!r}") from None

    def _ident(self):
        return (self.labels, self.dims, self.layout)

    def __eq__(self, other):
        return isinstance(other, AlgebraDescriptor) and self._ident() == other._ident()

    def __hash__(self):
        return hash(self._ident())

    def __repr__(self):
        return f"AlgebraDescriptor({list(self.blocks)})"


@lru_cache(maxsize=256)
def _mask(algebra):
    m = np.zeros((algebra.dim, algebra.dim), dtype=bool)
    for idx in algebra.layout:
        m[np.ix_(idx, idx)] = True
    m.setflags(write=False)
    return m


class AlgebraElement:
    """Element of a multi-matrix algebra, immutable once built."""

    __slots__ = ("algebra", "matrix")

    def __init__(self, algebra: AlgebraDescriptor, matrix):
        m = np.array(matrix, dtype=complex)
        if m.shape != (algebra.dim, algebra.dim):
            raise ShapeMismatch(f"expected a {algebra.dim}x{algebra.dim} matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise NumericalFailure("element has non-finite entries")
        m[~algebra.mask()] = 0
        m.setflags(write=False)
        self.algebra = algebra
        self.matrix = m

    @classmethod
    def from_blocks(cls, algebra: AlgebraDescriptor, blocks: Sequence) -> "AlgebraElement":
        if len(blocks) != len(algebra.dims):
            raise ShapeMismatch(f"expected {len(algebra.dims)} blocks, got {len(blocks)}")
        m = np.zeros((algebra.dim, algebra.dim), dtype=complex)
        for idx, b in zip(algebra.layout, blocks):
            b = np.asarray(b, dtype=complex)
            if b.shape != (len(idx), len(idx)):
                raise ShapeMismatch(f"block of shape {b.shape} does not fit dimension {len(idx)}")
            m[np.ix_(idx, idx)] = b
        return cls(algebra, m)

    @property
    def blocks(self) -> list:
        return [self.matrix[np.ix_(idx, idx)] for idx in self.algebra.layout]

    def _check(self, other):
        if not isinstance(other, AlgebraElement):
            raise TypeError(f"expected an AlgebraElement, got {type(other).__name__}")
        if other.algebra != self.algebra:
            raise AlgebraMismatch(f"{self.algebra} vs {other.algebra}")
        return other

    def __add__(self, other):
        other = self._check(other)
        return AlgebraElement(self.algebra, self.matrix + other.matrix)

    def __sub__(self, other):
        other = self._check(other)
        return AlgebraElement(self.algebra, self.matrix - other.matrix)

    def __matmul__(self, other):
        other = self._check(other)
        return AlgebraElement(self.algebra, self.matrix @ other.matrix)

    def __mul__(self, scalar):
        return AlgebraElement(self.algebra, self.matrix * complex(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return AlgebraElement(self.algebra, self.matrix / complex(scalar))

    def __neg__(self):
        return AlgebraElement(self.algebra, -self.matrix)

    def __repr__(self):
        return f"AlgebraElement({self.algebra!r},\n{self.matrix})"


@dataclass(frozen=True)
class TensorFactorization:
    """Ordered tensor factors of a composite algebra."""

    factors: tuple

    def __init__(self, factors):
        factors = tuple(factors)
        if not factors:
            raise EmptyList("a factorization needs at least one factor")
        object.__setattr__(self, "factors", factors)

    @cached_property
    def composite(self) -> AlgebraDescriptor:
        return reduce(AlgebraDescriptor.tensor, self.factors)

    def __len__(self):
        return len(self.factors)

    def sub(self, keep) -> "TensorFactorization":
        return TensorFactorization([self.factors[i] for i in keep])


def unit(algebra: AlgebraDescriptor) -> AlgebraElement:
    return AlgebraElement(algebra, np.eye(algebra.dim))


def matrix_unit(algebra: AlgebraDescriptor, block: int, i: int, j: int) -> AlgebraElement:
    """``E_ij`` inside block number ``block``."""
    idx = algebra.layout[block]
    m = np.zeros((algebra.dim, algebra.dim), dtype=complex)
    m[idx[i], idx[j]] = 1
    return AlgebraElement(algebra, m)


def matrix_unit_indices(algebra: AlgebraDescriptor):
    """Ambient index pairs ``(p, q)`` of all matrix units, block by block."""
    return [(p, q) for idx in algebra.layout for p in idx for q in idx]


def tensor_elements(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    return AlgebraElement(a.algebra.tensor(b.algebra), np.kron(a.matrix, b.matrix))


def tensor_all(items: Sequence[AlgebraElement]) -> AlgebraElement:
    if not items:
        raise EmptyList("nothing to tensor")
    return reduce(tensor_elements, items)


def _check_keep(keep, n):
    keep = sorted(set(int(i) for i in keep))
    if not keep:
        raise IndexOutOfRange("keep set must be nonempty")
    bad = [i for i in keep if not 0 <= i < n]
    if bad:
        raise IndexOutOfRange(f"factor indices {bad} outside 0..{n - 1}", indices=bad)
    return keep


def partial_trace(x: AlgebraElement, factorization: TensorFactorization, keep) -> AlgebraElement:
    """Trace out every factor not listed in ``keep``."""
    if x.algebra != factorization.composite:
        raise AlgebraMismatch("element does not live on the factorization's composite algebra")
    n = len(factorization)
    keep = _check_keep(keep, n)
    dims = [f.dim for f in factorization.factors]
    t = x.matrix.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyz"
    upper = letters.upper()
    rows = [letters[i] for i in range(n)]
    cols = [letters[i] if i not in keep else upper[i] for i in range(n)]
    out = "".join(letters[i] for i in keep) + "".join(upper[i] for i in keep)
    reduced = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    d = int(np.prod([dims[i] for i in keep]))
    sub = factorization.sub(keep).composite
    return AlgebraElement(sub, reduced.reshape(d, d))


def jordan_product(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    """Normalized Jordan product ``(ab + ba) / 2``."""
    if a.algebra != b.algebra:
        raise AlgebraMismatch(f"{a.algebra} vs {b.algebra}")
    return AlgebraElement(a.algebra, 0.5 * (a.matrix @ b.matrix + b.matrix @ a.matrix))


def extended_jordan(items: Sequence[AlgebraElement]) -> AlgebraElement:
    """Right-nested fold ``Jor(A0, Jor(A1, ... Jor(A_{n-1}, A_n)))``."""
    items = list(items)
    if not items:
        raise EmptyList("extended Jordan product of an empty list")
    acc = items[-1]
    for a in reversed(items[:-1]):
        acc = jordan_product(a, acc)
    return acc


def multiplication_dual_unit(algebra: AlgebraDescriptor) -> AlgebraElement:
    """``sum_x sum_ij E_ij (x) E_ji`` over each block ``x``."""
    d = algebra.dim
    m = np.zeros((d * d, d * d), dtype=complex)
    for idx in algebra.layout:
        for i in idx:
            for j in idx:
                m[i * d + j, j * d + i] = 1
    return AlgebraElement(algebra.tensor(algebra), m)


def dagger(x: AlgebraElement) -> AlgebraElement:
    return AlgebraElement(x.algebra, x.matrix.conj().T)


def trace(x: AlgebraElement) -> complex:
    return complex(np.trace(x.matrix))


def selfadjoint_deviation(x: AlgebraElement) -> float:
    return float(np.max(np.abs(x.matrix - x.matrix.conj().T), initial=0.0))


def is_selfadjoint(x: AlgebraElement, tol: float = TOL) -> bool:
    return selfadjoint_deviation(x) <= tol


def block_eigenvalues(x: AlgebraElement) -> np.ndarray:
    """Eigenvalues of the Hermitian part, block by block (ascending within each block)."""
    return np.concatenate([np.linalg.eigvalsh(0.5 * (b + b.conj().T)) for b in x.blocks])


def spectrum(x: AlgebraElement) -> np.ndarray:
    """Eigenvalues of a self-adjoint element, sorted descending."""
    return np.sort(block_eigenvalues(x))[::-1]


def is_positive(x: AlgebraElement, tol: float = TOL) -> bool:
    return is_selfadjoint(x, tol) and block_eigenvalues(x).min() >= -tol


def is_state(x: AlgebraElement, tol: float = TOL) -> bool:
    return is_positive(x, tol) and abs(trace(x) - 1) <= tol


def max_abs_diff(a: AlgebraElement, b: AlgebraElement) -> float:
    if a.algebra != b.algebra:
        raise AlgebraMismatch(f"{a.algebra} vs {b.algebra}")
    return float(np.max(np.abs(a.matrix - b.matrix), initial=0.0))


def random_state(algebra: AlgebraDescriptor, rng: np.random.Generator, rank=None) -> AlgebraElement:
    """Random density matrix from a Ginibre draw, pinched onto the block structure."""
    d = algebra.dim
    r = d if rank is None else rank
    g = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
    rho = AlgebraElement(algebra, g @ g.conj().T)
    return rho / trace(rho)


def descriptor_to_json(algebra: AlgebraDescriptor) -> list:
    return [{"label": label, "dim": dim} for label, dim in algebra.blocks]


def descriptor_from_json(data) -> AlgebraDescriptor:
    return AlgebraDescriptor([(b["label"], b["dim"]) for b in data])


def element_to_json(x: AlgebraElement) -> dict:
    return {
        "algebra": descriptor_to_json(x.algebra),
        "blocks": [{"re": b.real.tolist(), "im": b.imag.tolist()} for b in x.blocks],
    }


def element_from_json(data, algebra: AlgebraDescriptor = None) -> AlgebraElement:
    """Rebuild an element; blocks are matched by label when ``algebra`` is supplied."""
    declared = descriptor_from_json(data["algebra"])
    blocks = [np.asarray(b["re"], dtype=float) + 1j * np.asarray(b["im"], dtype=float) for b in data["blocks"]]
    if algebra is None:
        return AlgebraElement.from_blocks(declared, blocks)
    if sorted(declared.blocks) != sorted(algebra.blocks):
        raise AlgebraMismatch("declared blocks do not match the expected algebra")
    by_label = dict(zip(declared.labels, blocks))
    return AlgebraElement.from_blocks(algebra, [by_label[label] for label in algebra.labels])
