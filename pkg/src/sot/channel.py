"""Linear maps between multi-matrix algebras.

A map is stored as one action matrix on row-major vectorised ambient
matrices, ``vec(X)[i * d + j] = X[i, j]``. Component ``(x, y)`` is the
sub-matrix that takes block ``x`` of the domain to block ``y`` of the
codomain; entries that would read or write outside the blocks are zero.
The Jamiolkowski and Choi matrices are derived views of the action matrix.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .algebra import (
    TOL,
    AlgebraDescriptor,
    AlgebraElement,
    TensorFactorization,
    block_eigenvalues,
    descriptor_from_json,
    descriptor_to_json,
    partial_trace,
    unit,
)
from .errors import AlgebraMismatch, NumericalFailure, ParseError, ShapeMismatch


def _vec_mask(algebra):
    return algebra.mask().reshape(-1)


def _vec_indices(idx, d):
    return [p * d + q for p in idx for q in idx]


class SuperOperator:
    """Linear map ``domain -> codomain``; immutable once built."""

    def __init__(self, domain: AlgebraDescriptor, codomain: AlgebraDescriptor, action):
        m = np.array(action, dtype=complex)
        shape = (codomain.dim ** 2, domain.dim ** 2)
        if m.shape != shape:
            raise ShapeMismatch(f"action matrix must have shape {shape}, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise NumericalFailure("action matrix has non-finite entries")
        m[~_vec_mask(codomain), :] = 0
        m[:, ~_vec_mask(domain)] = 0
        m.setflags(write=False)
        self.domain = domain
        self.codomain = codomain
        self.action = m

    @classmethod
    def from_function(cls, domain, codomain, fn: Callable[[np.ndarray], np.ndarray]) -> "SuperOperator":
        """Tabulate ``fn`` (ambient matrix in, ambient matrix out) on the matrix units."""
        d = domain.dim
        m = np.zeros((codomain.dim ** 2, d * d), dtype=complex)
        for idx in domain.layout:
            for p in idx:
                for q in idx:
                    e = np.zeros((d, d), dtype=complex)
                    e[p, q] = 1
                    m[:, p * d + q] = np.asarray(fn(e), dtype=complex).reshape(-1)
        return cls(domain, codomain, m)

    @classmethod
    def from_components(cls, domain, codomain, components: dict) -> "SuperOperator":
        """Assemble from ``{(x_label, y_label): (n_y**2, m_x**2) matrix}``; missing pairs are zero."""
        m = np.zeros((codomain.dim ** 2, domain.dim ** 2), dtype=complex)
        for (x, y), comp in components.items():
            cols = _vec_indices(domain.layout[domain.index_of(x)], domain.dim)
            rows = _vec_indices(codomain.layout[codomain.index_of(y)], codomain.dim)
            comp = np.asarray(comp, dtype=complex)
            if comp.shape != (len(rows), len(cols)):
                raise ShapeMismatch(f"component ({x},{y}) must have shape {(len(rows), len(cols))}")
            m[np.ix_(rows, cols)] = comp
        return cls(domain, codomain, m)

    @classmethod
    def from_kraus(cls, domain, codomain, kraus) -> "SuperOperator":
        """``X -> sum_y P_y (sum_k K X K^dag) P_y`` with ``P_y`` the codomain block projections."""
        kraus = [np.asarray(k, dtype=complex) for k in kraus]
        action = sum(np.kron(k, k.conj()) for k in kraus)
        return cls(domain, codomain, action)

    def component(self, x: str, y: str) -> np.ndarray:
        cols = _vec_indices(self.domain.layout[self.domain.index_of(x)], self.domain.dim)
        rows = _vec_indices(self.codomain.layout[self.codomain.index_of(y)], self.codomain.dim)
        return self.action[np.ix_(rows, cols)]

    @cached_property
    def jamiolkowski_matrix(self) -> AlgebraElement:
        # J[(i,a),(j,b)] = E(E_ji)[a,b] = action[(a,b),(j,i)]
        da, db = self.domain.dim, self.codomain.dim
        m4 = self.action.reshape(db, db, da, da)
        j = np.transpose(m4, (3, 0, 2, 1)).reshape(da * db, da * db)
        return AlgebraElement(self.domain.tensor(self.codomain), j)

    def __call__(self, x: AlgebraElement) -> AlgebraElement:
        return apply(self, x)

    def __repr__(self):
        return f"SuperOperator({self.domain!r} -> {self.codomain!r})"


def apply(e: SuperOperator, x: AlgebraElement) -> AlgebraElement:
    if x.algebra != e.domain:
        raise AlgebraMismatch(f"input lives on {x.algebra}, map expects {e.domain}")
    d = e.codomain.dim
    return AlgebraElement(e.codomain, (e.action @ x.matrix.reshape(-1)).reshape(d, d))


def compose(f: SuperOperator, e: SuperOperator) -> SuperOperator:
    """``f o e``: apply ``e`` first."""
    if e.codomain != f.domain:
        raise AlgebraMismatch(f"cannot compose: {e.codomain} is not {f.domain}")
    return SuperOperator(e.domain, f.codomain, f.action @ e.action)


def tensor(e: SuperOperator, f: SuperOperator) -> SuperOperator:
    a1, a2 = e.domain.dim, f.domain.dim
    b1, b2 = e.codomain.dim, f.codomain.dim
    me = e.action.reshape(b1, b1, a1, a1)
    mf = f.action.reshape(b2, b2, a2, a2)
    t = np.einsum("abij,cdkl->acbdikjl", me, mf)
    return SuperOperator(
        e.domain.tensor(f.domain),
        e.codomain.tensor(f.codomain),
        t.reshape((b1 * b2) ** 2, (a1 * a2) ** 2),
    )


def hs_dual(e: SuperOperator) -> SuperOperator:
    """Adjoint for the Hilbert-Schmidt pairing ``<A, B> = tr(A^dag B)``."""
    return SuperOperator(e.codomain, e.domain, e.action.conj().T)


def jamiolkowski(e: SuperOperator) -> AlgebraElement:
    """``(id (x) e)(mu*(1)) = sum E_ij (x) e(E_ji)`` on ``domain (x) codomain``."""
    return e.jamiolkowski_matrix


def jamiolkowski_inverse(t: AlgebraElement, domain: AlgebraDescriptor, codomain: AlgebraDescriptor) -> SuperOperator:
    """Map ``rho -> tr_domain((rho (x) 1) t)``."""
    if t.algebra != domain.tensor(codomain):
        raise AlgebraMismatch("element does not live on domain (x) codomain")
    da, db = domain.dim, codomain.dim
    j4 = t.matrix.reshape(da, db, da, db)
    m = np.transpose(j4, (1, 3, 2, 0)).reshape(db * db, da * da)
    return SuperOperator(domain, codomain, m)


def choi_matrix(e: SuperOperator) -> AlgebraElement:
    """``sum E_ij (x) e(E_ij)`` on ``domain (x) codomain``."""
    da, db = e.domain.dim, e.codomain.dim
    m4 = e.action.reshape(db, db, da, da)
    c = np.transpose(m4, (2, 0, 3, 1)).reshape(da * db, da * db)
    return AlgebraElement(e.domain.tensor(e.codomain), c)


@dataclass(frozen=True)
class Check:
    """Verdict plus the worst offending value; truthy when the check passed."""

    ok: bool
    witness: float
    detail: dict = None

    def __bool__(self):
        return self.ok


def is_trace_preserving(e: SuperOperator, tol: float = TOL) -> Check:
    dev = np.abs(apply(hs_dual(e), unit(e.codomain)).matrix - np.eye(e.domain.dim)).max()
    return Check(bool(dev <= tol), float(dev))


def _dagger_deviation_basis(e: SuperOperator):
    # e(E_ji) against e(E_ij)^dag for every pair of matrix units
    da, db = e.domain.dim, e.codomain.dim
    m4 = e.action.reshape(db, db, da, da)
    dev = np.abs(m4 - np.transpose(m4, (1, 0, 3, 2)).conj())
    worst = np.unravel_index(np.argmax(dev), dev.shape)
    return float(dev.max()), worst


def is_dagger_preserving(e: SuperOperator, tol: float = TOL) -> Check:
    """Checked on the matrix-unit basis and through self-adjointness of the Jamiolkowski matrix."""
    basis_dev, (a, b, i, j) = _dagger_deviation_basis(e)
    jm = jamiolkowski(e).matrix
    j_dev = float(np.abs(jm - jm.conj().T).max())
    by_basis, by_j = basis_dev <= tol, j_dev <= tol
    if by_basis != by_j:
        raise AssertionError(f"dagger-preservation routes disagree: basis {basis_dev}, Jamiolkowski {j_dev}")
    detail = {"basis_deviation": basis_dev, "jamiolkowski_deviation": j_dev}
    if not by_basis:
        detail["matrix_unit"] = (int(j), int(i))
        detail["output_entry"] = (int(a), int(b))
    return Check(by_basis, basis_dev, detail)


def is_completely_positive(e: SuperOperator, tol: float = TOL) -> Check:
    c = choi_matrix(e)
    herm = float(np.abs(c.matrix - c.matrix.conj().T).max())
    low = float(block_eigenvalues(c).min())
    return Check(herm <= tol and low >= -tol, low, {"choi_hermiticity_deviation": herm})


def is_cptp(e: SuperOperator, tol: float = TOL) -> Check:
    tp = is_trace_preserving(e, tol)
    cp = is_completely_positive(e, tol)
    return Check(tp.ok and cp.ok, cp.witness, {"trace_deviation": tp.witness, "choi_min_eig": cp.witness})


def partial_trace_map(factorization: TensorFactorization, keep) -> SuperOperator:
    """The partial trace as a map ``composite -> (x)_{i in keep} A_i``."""
    src = factorization.composite
    dst = factorization.sub(sorted(keep)).composite
    return SuperOperator.from_function(
        src, dst, lambda m: partial_trace(AlgebraElement(src, m), factorization, keep).matrix
    )


def identity_channel(algebra: AlgebraDescriptor) -> SuperOperator:
    return SuperOperator(algebra, algebra, np.eye(algebra.dim ** 2))


def depolarizing(dim: int, p: float = 1.0) -> SuperOperator:
    """``rho -> (1 - p) rho + p tr(rho) I / dim`` on ``M_dim``."""
    alg = AlgebraDescriptor.matrix(dim)
    full = np.outer(np.eye(dim).reshape(-1), np.eye(dim).reshape(-1)) / dim
    return SuperOperator(alg, alg, (1 - p) * np.eye(dim * dim) + p * full)


def dephasing(dim: int, p: float = 1.0) -> SuperOperator:
    """``rho -> (1 - p) rho + p diag(rho)`` on ``M_dim``."""
    alg = AlgebraDescriptor.matrix(dim)
    diag = np.diag(np.eye(dim).reshape(-1))
    return SuperOperator(alg, alg, (1 - p) * np.eye(dim * dim) + p * diag)


def unitary_channel(u) -> SuperOperator:
    u = np.asarray(u, dtype=complex)
    alg = AlgebraDescriptor.matrix(u.shape[0])
    return SuperOperator.from_kraus(alg, alg, [u])


def transpose_map(dim: int) -> SuperOperator:
    alg = AlgebraDescriptor.matrix(dim)
    return SuperOperator.from_function(alg, alg, lambda m: m.T)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_cptp(domain: AlgebraDescriptor, codomain: AlgebraDescriptor, rng: np.random.Generator, rank: int = None) -> SuperOperator:
    """Random channel from a random Stinespring isometry, pinched onto the codomain blocks."""
    da, db = domain.dim, codomain.dim
    r = rank or da * db
    z = rng.normal(size=(r * db, da)) + 1j * rng.normal(size=(r * db, da))
    v, _ = np.linalg.qr(z)
    return SuperOperator.from_kraus(domain, codomain, v.reshape(r, db, da))


def channel_to_json(e: SuperOperator) -> dict:
    comps = []
    for x in e.domain.labels:
        for y in e.codomain.labels:
            c = e.component(x, y)
            comps.append({"source": x, "target": y, "re": c.real.tolist(), "im": c.imag.tolist()})
    return {
        "domain": descriptor_to_json(e.domain),
        "codomain": descriptor_to_json(e.codomain),
        "kind": "matrix",
        "components": comps,
    }


def _named(domain, codomain, entry):
    name = entry.get("name")
    param = entry.get("param")
    single = len(domain.dims) == 1 and domain == codomain
    if name == "identity":
        if domain != codomain:
            raise ParseError("identity channel needs equal domain and codomain")
        return identity_channel(domain)
    if name in ("depolarizing", "dephasing"):
        if not single:
            raise ParseError(f"{name} channel needs a single matrix block")
        fn = depolarizing if name == "depolarizing" else dephasing
        return fn(domain.dims[0], 1.0 if param is None else float(param))
    if name == "unitary":
        if not single:
            raise ParseError("unitary channel needs a single matrix block")
        u = np.asarray(param["re"], dtype=float) + 1j * np.asarray(param["im"], dtype=float)
        return unitary_channel(u)
    if name == "transpose":
        if not single:
            raise ParseError("transpose map needs a single matrix block")
        return transpose_map(domain.dims[0])
    if name == "stochastic":
        from .classical import StochasticMap, q_embed

        return q_embed(StochasticMap(domain.labels, codomain.labels, param))
    raise ParseError(f"unknown named channel {name!r}")


def channel_from_json(data) -> SuperOperator:
    domain = descriptor_from_json(data["domain"])
    codomain = descriptor_from_json(data["codomain"])
    kind = data.get("kind", "matrix")
    if kind == "named":
        e = _named(domain, codomain, data["components"])
        # named constructors use default labels; reattach the declared ones
        return SuperOperator(domain, codomain, e.action)
    if kind != "matrix":
        raise ParseError(f"unknown channel kind {kind!r}")
    comps = {
        (c["source"], c["target"]): np.asarray(c["re"], dtype=float) + 1j * np.asarray(c["im"], dtype=float)
        for c in data["components"]
    }
    return SuperOperator.from_components(domain, codomain, comps)
