"""One-step bloom maps ``A -> A (x) B`` built from the Jamiolkowski matrix.

Every bloom here is a member of the family
``rho -> lam (rho (x) 1) J + (1 - lam) J (rho (x) 1)`` with ``J`` the
Jamiolkowski matrix of the channel: ``lam = 1`` is the right bloom,
``lam = 0`` the left bloom and ``lam = 1/2`` the symmetric (Jordan) bloom.
"""
from dataclasses import dataclass

import numpy as np

from .algebra import (
    AlgebraElement,
    TensorFactorization,
    jordan_product,
    tensor_elements,
    unit,
)
from .channel import (
    SuperOperator,
    compose,
    identity_channel,
    jamiolkowski,
    partial_trace_map,
)
from .errors import AlgebraMismatch


@dataclass(frozen=True)
class BloomKind:
    """Bloom selected by its interpolation weight ``lam`` (complex allowed)."""

    lam: complex

    def __init__(self, lam):
        object.__setattr__(self, "lam", complex(lam))

    @classmethod
    def lambda_(cls, lam) -> "BloomKind":
        return cls(lam)

    @property
    def name(self) -> str:
        return {1: "right", 0: "left", 0.5: "symmetric"}.get(self.lam, "lambda")

    @property
    def is_associative(self) -> bool:
        return self.name != "lambda"


RIGHT = BloomKind(1)
LEFT = BloomKind(0)
SYMMETRIC = BloomKind(0.5)


def _combine(kind, p, j):
    if kind == SYMMETRIC:
        return jordan_product(p, j)
    if kind == RIGHT:
        return p @ j
    if kind == LEFT:
        return j @ p
    return kind.lam * (p @ j) + (1 - kind.lam) * (j @ p)


def bloom_apply(kind: BloomKind, e: SuperOperator, rho: AlgebraElement) -> AlgebraElement:
    if rho.algebra != e.domain:
        raise AlgebraMismatch(f"state lives on {rho.algebra}, channel expects {e.domain}")
    p = tensor_elements(rho, unit(e.codomain))
    return _combine(kind, p, jamiolkowski(e))


def bloom_as_map(kind: BloomKind, e: SuperOperator) -> SuperOperator:
    """The bloom of ``e`` as a linear map ``domain -> domain (x) codomain``."""
    da, db = e.domain.dim, e.codomain.dim
    j4 = jamiolkowski(e).matrix.reshape(da, db, da, db)
    eye = np.eye(da)
    # (E_pq (x) 1) J  has entries  delta_ip J[(q,a),(j,b)]
    right = np.einsum("ip,qajb->iajbpq", eye, j4)
    # J (E_pq (x) 1)  has entries  J[(i,a),(p,b)] delta_qj
    left = np.einsum("iapb,qj->iajbpq", j4, eye)
    lam = kind.lam
    action = (lam * right + (1 - lam) * left).reshape((da * db) ** 2, da * da)
    return SuperOperator(e.domain, e.domain.tensor(e.codomain), action)


@dataclass(frozen=True)
class ShriekReport:
    """Largest deviations of the two marginal identities over the matrix-unit basis."""

    channel_deviation: float
    identity_deviation: float

    def within(self, tol: float) -> bool:
        return max(self.channel_deviation, self.identity_deviation) <= tol


def check_bloom_shriek(e: SuperOperator, kind: BloomKind = SYMMETRIC) -> ShriekReport:
    """Compare ``tr_A o bloom`` with ``e`` and ``tr_B o bloom`` with the identity."""
    b = bloom_as_map(kind, e)
    f = TensorFactorization([e.domain, e.codomain])
    to_b = compose(partial_trace_map(f, [1]), b)
    to_a = compose(partial_trace_map(f, [0]), b)
    return ShriekReport(
        float(np.abs(to_b.action - e.action).max()),
        float(np.abs(to_a.action - identity_channel(e.domain).action).max()),
    )
