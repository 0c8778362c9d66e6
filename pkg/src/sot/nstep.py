"""n-step processes and their states over time.

Three independent routes compute the symmetric state over time of a chain
``(rho, E_1, ..., E_n)``:

* ``yinyang``: the recursive definition, one symmetric bloom per step, each
  step blooming ``E_k o tr`` where ``tr`` keeps the newest factor;
* ``yinyang_sum_formula``: the average over all ``2**n`` orderings of the
  padded Jamiolkowski matrices around ``rho (x) 1``;
* ``yinyang_jordan_formula``: the right-nested Jordan product of
  ``rho (x) 1`` with the padded Jamiolkowski matrices.

``bloom_paren`` builds the n-bloom of any binary parenthesization and any
bloom kind.
"""
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Sequence

from .algebra import (
    TOL,
    AlgebraElement,
    TensorFactorization,
    extended_jordan,
    is_state,
    max_abs_diff,
    partial_trace,
    tensor_all,
    unit,
)
from .bloom import SYMMETRIC, BloomKind, bloom_apply, bloom_as_map
from .channel import SuperOperator, apply, compose, identity_channel, jamiolkowski, partial_trace_map
from .errors import ChainMismatch, ChainTooLong, EmptyList, IndexOutOfRange, ShapeMismatch, TooLarge

SUM_FORMULA_MAX_STEPS = 20
CATALAN_MAX = 8


@dataclass(frozen=True)
class ProcessChain:
    """Initial state on ``A_0`` followed by channels ``A_{i-1} -> A_i``."""

    rho: AlgebraElement
    channels: tuple

    def __init__(self, rho: AlgebraElement, channels: Sequence[SuperOperator], require_state: bool = False, tol: float = TOL):
        channels = tuple(channels)
        if not channels:
            raise EmptyList("a process needs at least one channel")
        if rho.algebra != channels[0].domain:
            raise ChainMismatch("initial state does not live on the first channel's domain", step=0)
        for k in range(1, len(channels)):
            if channels[k - 1].codomain != channels[k].domain:
                raise ChainMismatch(f"channel {k} codomain does not match channel {k + 1} domain", step=k)
        if require_state and not is_state(rho, tol):
            raise ValueError("initial element is not a state")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "channels", channels)

    @property
    def n(self) -> int:
        return len(self.channels)

    @property
    def algebras(self) -> list:
        return [self.rho.algebra] + [e.codomain for e in self.channels]

    @property
    def factorization(self) -> TensorFactorization:
        return TensorFactorization(self.algebras)

    @property
    def states(self) -> list:
        """``rho_i = E_i o ... o E_1 (rho)`` for ``i = 0..n``."""
        out = [self.rho]
        for e in self.channels:
            out.append(apply(e, out[-1]))
        return out


def _last_factor_trace(algebras) -> SuperOperator:
    """Partial trace ``A_0 (x) ... (x) A_{k-1} -> A_{k-1}``; identity for a single factor."""
    if len(algebras) == 1:
        return identity_channel(algebras[0])
    f = TensorFactorization(algebras)
    return partial_trace_map(f, [len(algebras) - 1])


def yinyang(chain: ProcessChain) -> AlgebraElement:
    algebras = chain.algebras
    tau = bloom_apply(SYMMETRIC, chain.channels[0], chain.rho)
    for k in range(2, chain.n + 1):
        step = compose(chain.channels[k - 1], _last_factor_trace(algebras[:k]))
        tau = bloom_apply(SYMMETRIC, step, tau)
    return tau


def padded_jamiolkowski(chain: ProcessChain, j: int) -> AlgebraElement:
    """``1 (x) J[E_j] (x) 1`` on ``A_0 (x) ... (x) A_n``, with ``J[E_j]`` on factors ``j-1, j``."""
    algebras = chain.algebras
    parts = [unit(a) for a in algebras[: j - 1]] + [jamiolkowski(chain.channels[j - 1])]
    parts += [unit(a) for a in algebras[j + 1 :]]
    return tensor_all(parts)


def _rho_padded(chain: ProcessChain) -> AlgebraElement:
    return tensor_all([chain.rho] + [unit(a) for a in chain.algebras[1:]])


def yinyang_sum_formula(chain: ProcessChain) -> AlgebraElement:
    n = chain.n
    if n > SUM_FORMULA_MAX_STEPS:
        raise ChainTooLong(f"{n} steps exceeds the subset-sum guard of {SUM_FORMULA_MAX_STEPS}")
    js = [padded_jamiolkowski(chain, j).matrix for j in range(1, n + 1)]
    p = _rho_padded(chain).matrix
    total = 0
    for mask in range(2 ** n):
        term = p
        for j in range(n):
            if mask >> j & 1:
                term = js[j] @ term
            else:
                term = term @ js[j]
        total = total + term
    return AlgebraElement(_rho_padded(chain).algebra, total / 2 ** n)


def yinyang_jordan_formula(chain: ProcessChain) -> AlgebraElement:
    items = [_rho_padded(chain)] + [padded_jamiolkowski(chain, j) for j in range(1, chain.n + 1)]
    return extended_jordan(items)


def multi_marginal(tau: AlgebraElement, factorization: TensorFactorization, keep) -> AlgebraElement:
    return partial_trace(tau, factorization, keep)


def coarse_grain(chain: ProcessChain, keep) -> ProcessChain:
    """The process seen only at times ``keep``: ``(rho_{i1}, E_{i2} o ... o E_{i1+1}, ...)``."""
    keep = sorted(set(keep))
    if len(keep) < 2 or keep[0] < 0 or keep[-1] > chain.n:
        raise IndexOutOfRange(f"keep set {keep} must hold at least two indices in 0..{chain.n}")
    channels = []
    for a, b in zip(keep, keep[1:]):
        channels.append(reduce(lambda acc, e: compose(e, acc), chain.channels[a + 1 : b], chain.channels[a]))
    return ProcessChain(chain.states[keep[0]], channels)


# parenthesization trees: a leaf is an int, a node is a pair (left, right)


def tree_leaves(tree) -> list:
    if isinstance(tree, int):
        return [tree]
    if isinstance(tree, (tuple, list)) and len(tree) == 2:
        return tree_leaves(tree[0]) + tree_leaves(tree[1])
    raise ShapeMismatch(f"malformed parenthesization node {tree!r}")


def as_tree(obj):
    """Nested lists (as read from JSON) to nested tuples."""
    if isinstance(obj, bool):
        raise ShapeMismatch("tree leaves must be integers")
    if isinstance(obj, int):
        return obj
    if isinstance(obj, (list, tuple)) and len(obj) == 2:
        return (as_tree(obj[0]), as_tree(obj[1]))
    raise ShapeMismatch(f"malformed parenthesization node {obj!r}")


@lru_cache(maxsize=None)
def _trees(lo: int, hi: int) -> tuple:
    if lo == hi:
        return (lo,)
    return tuple((l, r) for k in range(lo + 1, hi + 1) for l in _trees(lo, k - 1) for r in _trees(k, hi))


def catalan_enumerate(n: int) -> list:
    """All full binary trees over the ordered leaves ``0..n``."""
    if n < 1:
        raise ValueError("n must be positive")
    if n > CATALAN_MAX:
        raise TooLarge(f"enumeration limited to n <= {CATALAN_MAX}")
    return list(_trees(0, n))


def left_comb(n: int):
    return reduce(lambda acc, i: (acc, i), range(1, n + 1), 0)


def bloom_paren(tree, channels: Sequence[SuperOperator], kind: BloomKind = SYMMETRIC) -> SuperOperator:
    """n-bloom ``A_0 -> A_0 (x) ... (x) A_n`` for the given parenthesization."""
    channels = list(channels)
    tree = as_tree(tree)
    if tree_leaves(tree) != list(range(len(channels) + 1)):
        raise ShapeMismatch(f"tree leaves must be 0..{len(channels)} in order")
    for k in range(1, len(channels)):
        if channels[k - 1].codomain != channels[k].domain:
            raise ChainMismatch(f"channel {k} codomain does not match channel {k + 1} domain", step=k)
    algebras = [channels[0].domain] + [e.codomain for e in channels]

    def build(node):
        # map A_a -> A_a (x) ... (x) A_b for the leaves a..b under this node
        if isinstance(node, int):
            return identity_channel(algebras[node])
        left, right = node
        leaves = tree_leaves(left)
        a, k = leaves[0], leaves[-1] + 1
        step = compose(channels[k - 1], _last_factor_trace(algebras[a:k]))
        step = compose(build(right), step)
        return compose(bloom_as_map(kind, step), build(left))

    return build(tree)


def reduction_identity_check(chain: ProcessChain, i: int, tol: float = TOL) -> bool:
    """Merge ``A_i`` and ``A_{i+1}`` into one factor and compare both states over time."""
    n = chain.n
    if not 1 <= i <= n - 1:
        raise IndexOutOfRange(f"reduction index must lie in 1..{n - 1}, got {i}")
    es = chain.channels
    merged = compose(bloom_as_map(SYMMETRIC, es[i]), es[i - 1])
    channels = list(es[: i - 1]) + [merged]
    if i + 2 <= n:
        pair = TensorFactorization([es[i - 1].codomain, es[i].codomain])
        channels.append(compose(es[i + 1], partial_trace_map(pair, [1])))
        channels += es[i + 2 :]
    lhs = yinyang(chain)
    rhs = yinyang(ProcessChain(chain.rho, channels))
    return max_abs_diff(lhs, rhs) <= tol
