"""Stochastic maps, probability distributions and their quantum embeddings.

Classical data lives on commutative algebras (all blocks 1x1), so every
classical object here is also an ordinary ``AlgebraElement`` or
``SuperOperator`` and flows through the same code as the quantum case.
"""
from dataclasses import dataclass
from itertools import product

import numpy as np

from .algebra import TOL, AlgebraDescriptor, AlgebraElement, tensor_elements, unit
from .bloom import LEFT, RIGHT, SYMMETRIC, bloom_apply
from .channel import SuperOperator, jamiolkowski
from .errors import NotClassical, ShapeMismatch, SingularMarginal

MARGINAL_TOL = 1e-12


@dataclass(frozen=True)
class StochasticMap:
    """Column-stochastic matrix ``probs[y, x] = P(y | x)``."""

    source: tuple
    target: tuple
    probs: np.ndarray

    def __init__(self, source, target, probs, tol=TOL):
        probs = np.array(probs, dtype=float)
        source, target = tuple(str(x) for x in source), tuple(str(y) for y in target)
        if probs.shape != (len(target), len(source)):
            raise ShapeMismatch(f"probs must have shape {(len(target), len(source))}, got {probs.shape}")
        if np.any(probs < -tol) or np.any(probs > 1 + tol):
            raise ValueError("transition probabilities must lie in [0, 1]")
        if np.any(np.abs(probs.sum(axis=0) - 1) > tol):
            raise ValueError("columns of a stochastic map must sum to 1")
        probs.setflags(write=False)
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "probs", probs)


@dataclass(frozen=True)
class ProbDist:
    """Distribution on a finite set; ``quasi=True`` drops the positivity requirement."""

    set: tuple
    weights: np.ndarray
    quasi: bool = False

    def __init__(self, labels, weights, quasi=False, tol=TOL):
        weights = np.array(weights, dtype=float)
        labels = tuple(str(x) for x in labels)
        if weights.shape != (len(labels),):
            raise ShapeMismatch("one weight per label required")
        if not quasi and np.any(weights < -tol):
            raise ValueError("negative probability weight")
        if abs(weights.sum() - 1) > tol:
            raise ValueError("weights must sum to 1")
        weights.setflags(write=False)
        object.__setattr__(self, "set", labels)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "quasi", quasi)


def _require_classical(*algebras):
    for a in algebras:
        if not a.is_classical:
            raise NotClassical(f"{a} has a block of dimension > 1")


def as_element(p: ProbDist) -> AlgebraElement:
    """``sum_x p_x delta_x`` on ``C^X``."""
    return AlgebraElement(AlgebraDescriptor.classical(p.set), np.diag(p.weights))


def as_distribution(x: AlgebraElement, quasi=False) -> ProbDist:
    _require_classical(x.algebra)
    return ProbDist(x.algebra.labels, np.real(np.diag(x.matrix)), quasi=quasi)


def q_embed(f: StochasticMap) -> SuperOperator:
    """``delta_x -> sum_y f[y, x] delta_y``."""
    src = AlgebraDescriptor.classical(f.source)
    dst = AlgebraDescriptor.classical(f.target)
    comps = {(x, y): [[f.probs[iy, ix]]] for ix, x in enumerate(src.labels) for iy, y in enumerate(dst.labels)}
    return SuperOperator.from_components(src, dst, comps)


def stochastic_map(e: SuperOperator) -> StochasticMap:
    """Read the conditional probabilities back off a classical channel."""
    _require_classical(e.domain, e.codomain)
    probs = [[e.component(x, y)[0, 0].real for x in e.domain.labels] for y in e.codomain.labels]
    return StochasticMap(e.domain.labels, e.codomain.labels, probs)


def classical_bloom(e: SuperOperator) -> SuperOperator:
    """``sum_x r_x delta_x -> sum_{x,y} r_x e_yx (delta_x (x) delta_y)``."""
    _require_classical(e.domain, e.codomain)
    dom, cod = e.domain, e.codomain
    joint = dom.tensor(cod)
    comps = {}
    for x in dom.labels:
        for xx, y in product(dom.labels, cod.labels):
            label = joint.labels[dom.index_of(xx) * len(cod.labels) + cod.index_of(y)]
            weight = e.component(x, y)[0, 0] if xx == x else 0.0
            comps[(x, label)] = [[weight]]
    return SuperOperator.from_components(dom, joint, comps)


def classical_state_over_time(p: ProbDist, f: StochasticMap) -> ProbDist:
    """Joint distribution ``P(x, y) = P(x) P(y | x)``, ordered x-major."""
    if tuple(p.set) != tuple(f.source):
        raise ShapeMismatch("distribution and map disagree on the source set")
    w = (p.weights[:, None] * f.probs.T).reshape(-1)
    labels = [f"({x},{y})" for x, y in product(p.set, f.target)]
    return ProbDist(labels, w, quasi=p.quasi)


def classical_extract(joint: ProbDist, source, target) -> tuple:
    """Invert the classical state over time: ``P(y | x) = P(x, y) / P(x)``."""
    source, target = list(source), list(target)
    w = np.asarray(joint.weights).reshape(len(source), len(target))
    marginal = w.sum(axis=1)
    low = int(np.argmin(marginal))
    if marginal[low] <= MARGINAL_TOL:
        raise SingularMarginal(
            f"marginal weight of {source[low]!r} is {marginal[low]:.3g}", label=source[low], weight=float(marginal[low])
        )
    return ProbDist(source, marginal, quasi=joint.quasi), StochasticMap(source, target, (w / marginal[:, None]).T)


def classical_chain_joint(p: ProbDist, maps) -> np.ndarray:
    """Joint tensor ``P(x0, ..., xn) = P(x0) P(x1 | x0) ... P(xn | x_{n-1})``."""
    joint = np.asarray(p.weights, dtype=float)
    for f in maps:
        joint = joint[..., None] * f.probs.T.reshape((1,) * (joint.ndim - 1) + f.probs.T.shape)
    return joint


def classical_chain_extract(joint: np.ndarray, sets) -> tuple:
    """Initial distribution and transition maps of a Markov chain from its joint tensor."""
    joint = np.asarray(joint, dtype=float)
    sets = [list(s) for s in sets]
    if joint.shape != tuple(len(s) for s in sets):
        raise ShapeMismatch("joint tensor shape does not match the label sets")
    axes = range(joint.ndim)
    p0 = joint.sum(axis=tuple(a for a in axes if a != 0))
    maps = []
    for i in range(1, joint.ndim):
        pair = joint.sum(axis=tuple(a for a in axes if a not in (i - 1, i)))
        _, f = classical_extract(ProbDist([f"{a},{b}" for a, b in product(sets[i - 1], sets[i])], pair.reshape(-1)), sets[i - 1], sets[i])
        maps.append(f)
    return ProbDist(sets[0], p0), maps


def check_classical_reduction(rho: AlgebraElement, e: SuperOperator, tol: float = TOL) -> bool:
    """True when ``rho (x) 1`` commutes with the Jamiolkowski matrix of ``e``.

    In that case the right, left and symmetric blooms must coincide, and this is
    asserted before returning.
    """
    p = tensor_elements(rho, unit(e.codomain)).matrix
    j = jamiolkowski(e).matrix
    if np.abs(p @ j - j @ p).max() > tol:
        return False
    values = [bloom_apply(kind, e, rho).matrix for kind in (RIGHT, LEFT, SYMMETRIC)]
    spread = max(np.abs(v - values[2]).max() for v in values)
    if spread > tol:
        raise AssertionError(f"commuting inputs but blooms differ by {spread}")
    return True
