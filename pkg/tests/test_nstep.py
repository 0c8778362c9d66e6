import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sot.algebra import AlgebraDescriptor, AlgebraElement, TensorFactorization, is_selfadjoint, random_state, trace
from sot.bloom import LEFT, RIGHT, SYMMETRIC, BloomKind, bloom_as_map
from sot.channel import SuperOperator, apply, compose, depolarizing, identity_channel, jamiolkowski, partial_trace_map, random_cptp
from sot.errors import ChainMismatch, ChainTooLong, EmptyList, IndexOutOfRange, ShapeMismatch, TooLarge
from sot.nstep import (
    ProcessChain,
    as_tree,
    bloom_paren,
    catalan_enumerate,
    coarse_grain,
    left_comb,
    multi_marginal,
    reduction_identity_check,
    tree_leaves,
    yinyang,
    yinyang_jordan_formula,
    yinyang_sum_formula,
)

from _oracles import anti, nested_yinyang, ptrace_loops, swap

Q = AlgebraDescriptor.matrix(2)
MIXED = AlgebraDescriptor([("a", 1), ("b", 2)])
seeds = st.integers(0, 2**32 - 1)


def random_chain(rng, n, algebras=None):
    algebras = algebras or [Q] * (n + 1)
    rho = random_state(algebras[0], rng)
    return ProcessChain(rho, [random_cptp(algebras[k], algebras[k + 1], rng) for k in range(n)])


def diff(a, b):
    return float(np.abs(a.matrix - b.matrix).max())


def test_chain_validation():
    with pytest.raises(EmptyList):
        ProcessChain(random_state(Q, np.random.default_rng(0)), [])
    with pytest.raises(ChainMismatch):
        ProcessChain(random_state(Q, np.random.default_rng(0)), [identity_channel(Q), identity_channel(MIXED)])
    with pytest.raises(ChainMismatch):
        ProcessChain(random_state(MIXED, np.random.default_rng(0)), [identity_channel(Q)])
    with pytest.raises(ValueError):
        ProcessChain(AlgebraElement(Q, np.eye(2)), [identity_channel(Q)], require_state=True)


def test_yinyang_examples():
    zero = AlgebraElement(Q, np.diag([1.0, 0.0]))
    out = yinyang(ProcessChain(zero, [identity_channel(Q)]))
    assert np.allclose(out.matrix, anti(np.kron(zero.matrix, np.eye(2)), swap(2)), atol=1e-15)

    rho = random_state(Q, np.random.default_rng(1))
    out = yinyang(ProcessChain(rho, [depolarizing(2), depolarizing(2)]))
    assert np.allclose(out.matrix, np.kron(np.kron(rho.matrix, np.eye(2) / 2), np.eye(2) / 2), atol=1e-15)

    half = np.eye(2) / 2
    oracle = anti(np.kron(half, np.eye(4)), anti(np.kron(swap(2), np.eye(2)), np.kron(np.eye(2), swap(2))))
    assert np.allclose(oracle, nested_yinyang(half, [swap(2), swap(2)], [2, 2, 2]))
    out = yinyang(ProcessChain(AlgebraElement(Q, half), [identity_channel(Q)] * 2))
    assert np.allclose(out.matrix, oracle, atol=1e-15)


def test_formula_examples():
    rng = np.random.default_rng(2)
    chain = random_chain(rng, 1)
    p = np.kron(chain.rho.matrix, np.eye(2))
    j = jamiolkowski(chain.channels[0]).matrix
    assert np.allclose(yinyang_sum_formula(chain).matrix, (p @ j + j @ p) / 2, atol=1e-15)
    assert np.allclose(yinyang_jordan_formula(chain).matrix, anti(p, j), atol=1e-15)

    ident = ProcessChain(AlgebraElement(Q, np.diag([0.3, 0.7])), [identity_channel(Q)] * 2)
    oracle = nested_yinyang(ident.rho.matrix, [swap(2), swap(2)], [2, 2, 2])
    assert np.allclose(yinyang_sum_formula(ident).matrix, oracle, atol=1e-15)
    assert np.allclose(yinyang_jordan_formula(ident).matrix, oracle, atol=1e-15)

    chain = random_chain(rng, 3)
    ref = yinyang(chain)
    assert diff(yinyang_sum_formula(chain), ref) <= 1e-9
    assert diff(yinyang_jordan_formula(chain), ref) <= 1e-9


def test_sum_formula_guard():
    chain = ProcessChain(AlgebraElement(AlgebraDescriptor.matrix(1), [[1]]), [identity_channel(AlgebraDescriptor.matrix(1))] * 21)
    with pytest.raises(ChainTooLong):
        yinyang_sum_formula(chain)


def test_paren_examples():
    rng = np.random.default_rng(3)
    e, f = random_cptp(Q, Q, rng), random_cptp(Q, Q, rng)
    tr = partial_trace_map(TensorFactorization([Q, Q]), [1])
    left = compose(bloom_as_map(SYMMETRIC, compose(f, tr)), bloom_as_map(SYMMETRIC, e))
    right = compose(bloom_as_map(SYMMETRIC, compose(bloom_as_map(SYMMETRIC, f), e)), identity_channel(Q))
    assert np.abs(bloom_paren(((0, 1), 2), [e, f]).action - left.action).max() < 1e-14
    assert np.abs(bloom_paren((0, (1, 2)), [e, f]).action - right.action).max() < 1e-14

    chain = random_chain(rng, 3)
    values = [bloom_paren(t, chain.channels).action for t in catalan_enumerate(3)]
    assert len(values) == 5
    for v in values:
        assert np.abs(v - values[0]).max() <= 1e-9

    with pytest.raises(ShapeMismatch):
        bloom_paren(((0, 2), 1), [e, f])
    with pytest.raises(ShapeMismatch):
        bloom_paren((0, 1), [e, f])


def test_catalan_counts():
    assert [len(catalan_enumerate(n)) for n in (1, 2, 3, 4)] == [1, 2, 5, 14]
    for n in range(1, 9):
        trees = catalan_enumerate(n)
        assert len(trees) == math.comb(2 * n, n) // (n + 1) == len(set(trees))
        assert all(tree_leaves(t) == list(range(n + 1)) for t in trees)
    with pytest.raises(TooLarge):
        catalan_enumerate(9)
    with pytest.raises(ValueError):
        catalan_enumerate(0)
    assert left_comb(3) == (((0, 1), 2), 3)
    assert as_tree([[0, 1], [2, 3]]) == ((0, 1), (2, 3))
    with pytest.raises(ShapeMismatch):
        as_tree([0, 1, 2])


def test_multi_marginal_examples():
    rng = np.random.default_rng(4)
    chain = random_chain(rng, 2)
    tau = yinyang(chain)
    f = chain.factorization
    e, g = chain.channels
    assert diff(multi_marginal(tau, f, [0, 2]), yinyang(ProcessChain(chain.rho, [compose(g, e)]))) < 1e-13
    for i, s in enumerate(chain.states):
        assert diff(multi_marginal(tau, f, [i]), s) < 1e-13

    rho = random_state(Q, rng)
    tau = yinyang(ProcessChain(rho, [depolarizing(2), depolarizing(2)]))
    oracle = ptrace_loops(tau.matrix, [2, 2, 2], [0, 2])
    assert np.allclose(oracle, np.kron(rho.matrix, np.eye(2) / 2))
    assert np.allclose(multi_marginal(tau, f, [0, 2]).matrix, oracle, atol=1e-15)
    with pytest.raises(IndexOutOfRange):
        multi_marginal(tau, f, [3])


def test_reduction_examples():
    rng = np.random.default_rng(5)
    assert reduction_identity_check(random_chain(rng, 2), 1)
    rho = random_state(Q, rng)
    assert reduction_identity_check(ProcessChain(rho, [identity_channel(Q)] * 3), 2)
    assert reduction_identity_check(random_chain(rng, 3), 1, tol=1e-9)
    with pytest.raises(IndexOutOfRange):
        reduction_identity_check(random_chain(rng, 2), 2)


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(1, 3))
def test_hermitian_unit_trace_marginals(seed, n):
    rng = np.random.default_rng(seed)
    algebras = [[Q, MIXED, AlgebraDescriptor.matrix(3)][int(k)] for k in rng.integers(0, 3, size=n + 1)]
    chain = random_chain(rng, n, algebras)
    tau = yinyang(chain)
    assert is_selfadjoint(tau, 1e-12)
    assert abs(trace(tau) - 1) < 1e-12
    for i, s in enumerate(chain.states):
        assert diff(multi_marginal(tau, chain.factorization, [i]), s) < 1e-12


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(1, 4))
def test_formula_equivalence(seed, n):
    rng = np.random.default_rng(seed)
    algebras = [[Q, MIXED][int(k)] for k in rng.integers(0, 2, size=n + 1)]
    chain = random_chain(rng, n, algebras)
    ref = yinyang(chain)
    assert diff(yinyang_sum_formula(chain), ref) <= 1e-12
    assert diff(yinyang_jordan_formula(chain), ref) <= 1e-12
    if n <= 2:
        dims = [a.dim for a in chain.algebras]
        jams = [jamiolkowski(e).matrix for e in chain.channels]
        assert np.abs(ref.matrix - nested_yinyang(chain.rho.matrix, jams, dims)).max() <= 1e-12


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_multilinearity(seed):
    rng = np.random.default_rng(seed)
    chain = random_chain(rng, 3)
    lam = complex(*rng.normal(size=2))
    sigma = random_state(Q, rng)
    mix = lam * chain.rho + (1 - lam) * sigma
    lhs = yinyang(ProcessChain(mix, chain.channels))
    rhs = lam * yinyang(chain) + (1 - lam) * yinyang(ProcessChain(sigma, chain.channels))
    assert diff(lhs, rhs) < 1e-12
    for slot in range(3):
        other = random_cptp(Q, Q, rng)
        e = chain.channels[slot]
        mixed = SuperOperator(Q, Q, lam * e.action + (1 - lam) * other.action)
        swapped = list(chain.channels)
        swapped[slot] = mixed
        lhs = yinyang(ProcessChain(chain.rho, swapped))
        swapped[slot] = other
        rhs = lam * yinyang(chain) + (1 - lam) * yinyang(ProcessChain(chain.rho, swapped))
        assert diff(lhs, rhs) < 1e-12


@settings(max_examples=5, deadline=None)
@given(seeds, st.sampled_from([RIGHT, LEFT, SYMMETRIC]))
def test_paren_independence_n4(seed, kind):
    rng = np.random.default_rng(seed)
    chain = random_chain(rng, 4)
    normal = bloom_paren(left_comb(4), chain.channels, kind).action
    for t in catalan_enumerate(4):
        assert np.abs(bloom_paren(t, chain.channels, kind).action - normal).max() <= 1e-12


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(1, 3))
def test_left_comb_is_yinyang(seed, n):
    rng = np.random.default_rng(seed)
    chain = random_chain(rng, n, [MIXED] * (n + 1))
    out = apply(bloom_paren(left_comb(n), chain.channels), chain.rho)
    assert diff(out, yinyang(chain)) < 1e-12


def test_lambda_kind_is_computed_for_every_tree():
    rng = np.random.default_rng(6)
    chain = random_chain(rng, 3)
    kind = BloomKind(0.3)
    for t in catalan_enumerate(3):
        out = apply(bloom_paren(t, chain.channels, kind), chain.rho)
        for i, s in enumerate(chain.states):
            assert diff(multi_marginal(out, chain.factorization, [i]), s) < 1e-12


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(2, 4))
def test_multi_marginal_coarse_grains(seed, n):
    rng = np.random.default_rng(seed)
    chain = random_chain(rng, n)
    tau = yinyang(chain)
    size = int(rng.integers(2, n + 2))
    keep = sorted(int(k) for k in rng.choice(n + 1, size=size, replace=False))
    lhs = multi_marginal(tau, chain.factorization, keep)
    assert diff(lhs, yinyang(coarse_grain(chain, keep))) < 1e-12


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(2, 4))
def test_reduction_property(seed, n):
    rng = np.random.default_rng(seed)
    chain = random_chain(rng, n)
    i = int(rng.integers(1, n))
    assert reduction_identity_check(chain, i, tol=1e-12)
