import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sot.algebra import (
    AlgebraDescriptor,
    AlgebraElement,
    TensorFactorization,
    partial_trace,
    random_state,
    tensor_elements,
    unit,
)
from sot.bloom import SYMMETRIC, bloom_apply
from sot.channel import (
    SuperOperator,
    depolarizing,
    identity_channel,
    jamiolkowski,
    jamiolkowski_inverse,
    random_cptp,
    transpose_map,
)
from sot.errors import NotInTStar, SingularMarginal
from sot.extract import (
    extract_process,
    extract_with_diagnostics,
    in_T_star_chain,
    in_T_star_pair,
    is_pdo,
    solve_sylvester,
)
from sot.nstep import ProcessChain, yinyang

from _oracles import ptrace_loops, random_hermitian, swap

Q = AlgebraDescriptor.matrix(2)
MIXED = AlgebraDescriptor([("a", 1), ("b", 2)])
QQ = TensorFactorization([Q, Q])
seeds = st.integers(0, 2**32 - 1)


def mixed_state(alg, rng, weight=0.2):
    """Random state pushed into the interior so every marginal stays invertible."""
    rho = random_state(alg, rng)
    return (1 - weight) * rho + weight * unit(alg) / alg.dim


def interior_chain(rng, algebras):
    """Chain whose channels are mixed with the replace-by-maximally-mixed map."""
    channels = []
    for a, b in zip(algebras, algebras[1:]):
        e = random_cptp(a, b, rng)
        flat = SuperOperator.from_function(a, b, lambda m, b=b: np.trace(m) * unit(b).matrix / b.dim)
        channels.append(SuperOperator(a, b, 0.8 * e.action + 0.2 * flat.action))
    return ProcessChain(mixed_state(algebras[0], rng), channels)


def diff(a, b):
    return float(np.abs(np.asarray(a) - np.asarray(b)).max())


def test_is_pdo_examples():
    assert is_pdo(AlgebraElement(Q.tensor(Q), np.eye(4) / 4), QQ)
    assert np.allclose(ptrace_loops(swap(2) / 2, [2, 2], [0]), np.eye(2) / 2)
    assert is_pdo(AlgebraElement(Q.tensor(Q), swap(2) / 2), QQ)
    bad = is_pdo(AlgebraElement(Q.tensor(Q), np.diag([1.0, 1, -1, 0])), QQ)
    assert not bad
    assert bad.failing_marginals[0][0] == 0 and np.isclose(bad.failing_marginals[0][1], -1)


def test_sylvester_examples():
    sol = solve_sylvester(AlgebraElement(Q.tensor(Q), swap(2) / 2), QQ)
    assert np.allclose(sol.x.matrix, swap(2), atol=1e-15)
    assert np.isclose(sol.spectrum_margin, 0.5)

    rng = np.random.default_rng(0)
    rho, e = mixed_state(Q, rng), random_cptp(Q, AlgebraDescriptor.matrix(3), rng)
    f = TensorFactorization([Q, AlgebraDescriptor.matrix(3)])
    sol = solve_sylvester(bloom_apply(SYMMETRIC, e, rho), f)
    assert diff(sol.x.matrix, jamiolkowski(e).matrix) < 1e-12 and sol.residual < 1e-12

    sigma = random_state(Q, rng)
    sol = solve_sylvester(tensor_elements(rho, sigma), QQ)
    assert diff(sol.x.matrix, np.kron(np.eye(2), sigma.matrix)) < 1e-12

    with pytest.raises(SingularMarginal):
        solve_sylvester(AlgebraElement(Q.tensor(Q), np.kron(np.diag([1.0, 0]), np.eye(2) / 2)), QQ)


def test_pair_membership_examples():
    rng = np.random.default_rng(1)
    rho = mixed_state(Q, rng)
    assert in_T_star_pair(bloom_apply(SYMMETRIC, random_cptp(Q, Q, rng), rho), QQ)
    assert in_T_star_pair(AlgebraElement(Q.tensor(Q), swap(2) / 2), QQ)
    report = in_T_star_pair(bloom_apply(SYMMETRIC, transpose_map(2), rho), QQ)
    assert report.pdo.ok and report.invertible and not report.cptp and not report
    assert np.isclose(report.choi_min_eig, -1)


def test_chain_membership_examples(caplog):
    rng = np.random.default_rng(2)
    chain = interior_chain(rng, [Q, Q, Q])
    report = in_T_star_chain(yinyang(chain), chain.factorization)
    assert report and report.pairwise_ok and report.global_ok and report.global_deviation < 1e-12

    f = TensorFactorization([Q, Q, Q])
    h = random_hermitian(8, rng)
    h = h / np.trace(h).real
    report = in_T_star_chain(AlgebraElement(f.composite, h), f)
    assert not report and not report.pdo.ok and report.pdo.failing_marginals

    t = bloom_apply(SYMMETRIC, random_cptp(Q, Q, rng), mixed_state(Q, rng))
    pair, chain_report = in_T_star_pair(t, QQ), in_T_star_chain(t, QQ)
    assert pair.ok == chain_report.ok == chain_report.pairwise_ok == chain_report.global_ok
    assert not caplog.records


def test_extract_examples():
    chain = extract_process(AlgebraElement(Q.tensor(Q), swap(2) / 2), QQ)
    assert np.allclose(chain.rho.matrix, np.eye(2) / 2)
    assert np.allclose(chain.channels[0].action, identity_channel(Q).action, atol=1e-15)

    rho = mixed_state(Q, np.random.default_rng(3))
    tau = yinyang(ProcessChain(rho, [depolarizing(2)] * 2))
    f = TensorFactorization([Q] * 3)
    back = extract_process(tau, f)
    assert diff(back.rho.matrix, rho.matrix) < 1e-12
    for e in back.channels:
        assert diff(jamiolkowski(e).matrix, np.eye(4) / 2) < 1e-12


def test_extract_refuses_and_forces():
    rho = mixed_state(Q, np.random.default_rng(4))
    t = bloom_apply(SYMMETRIC, transpose_map(2), rho)
    with pytest.raises(NotInTStar) as err:
        extract_process(t, QQ)
    assert err.value.details["pdo"] and not err.value.details["pairwise"]
    chain, diag = extract_with_diagnostics(t, QQ, force=True)
    assert diag.cptp == [False] and np.isclose(diag.choi_min_eig[0], -1)
    assert diff(chain.channels[0].action, transpose_map(2).action) < 1e-12

    singular = AlgebraElement(Q.tensor(Q), np.kron(np.diag([1.0, 0]), np.eye(2) / 2))
    with pytest.raises(NotInTStar):
        extract_process(singular, QQ)
    with pytest.raises(SingularMarginal):
        extract_process(singular, QQ, force=True)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_sylvester_uniqueness(seed):
    rng = np.random.default_rng(seed)
    f = TensorFactorization([MIXED, Q])
    t = bloom_apply(SYMMETRIC, random_cptp(MIXED, Q, rng), mixed_state(MIXED, rng))
    sol = solve_sylvester(t, f)
    a = np.kron(ptrace_loops(t.matrix, [3, 2], [0]), np.eye(2))

    def residual(x):
        return np.linalg.norm(a @ x + x @ a - 2 * t.matrix, 2)

    d = AlgebraElement(f.composite, rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))).matrix
    for eps in (1e-6, 1e-3, 1.0):
        assert residual(sol.x.matrix + eps * d) > residual(sol.x.matrix)
    assert sol.residual <= 1e-10


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(1, 3))
def test_round_trip(seed, n):
    rng = np.random.default_rng(seed)
    algebras = [[Q, AlgebraDescriptor.matrix(3)][int(k)] for k in rng.integers(0, 2, size=n + 1)]
    chain = interior_chain(rng, algebras)
    tau = yinyang(chain)
    f = chain.factorization
    back, diag = extract_with_diagnostics(tau, f)
    assert all(diag.cptp) and max(diag.residuals) <= 1e-10
    assert diff(back.rho.matrix, chain.rho.matrix) <= 1e-8
    for e, g in zip(back.channels, chain.channels):
        assert diff(jamiolkowski(e).matrix, jamiolkowski(g).matrix) <= 1e-8
    assert diff(yinyang(back).matrix, tau.matrix) <= 1e-8
    for i, s in enumerate(back.states):
        assert diff(s.matrix, partial_trace(tau, f, [i]).matrix) <= 1e-10


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_one_step_specialization(seed):
    rng = np.random.default_rng(seed)
    f = TensorFactorization([MIXED, Q])
    t = bloom_apply(SYMMETRIC, random_cptp(MIXED, Q, rng), mixed_state(MIXED, rng))
    chain = extract_process(t, f)
    assert diff(chain.rho.matrix, partial_trace(t, f, [0]).matrix) < 1e-14
    expected = jamiolkowski_inverse(solve_sylvester(t, f).x, MIXED, Q)
    assert diff(chain.channels[0].action, expected.action) < 1e-14
