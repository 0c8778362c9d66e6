"""Pseudo-density operators and recovery of the process that produced them.

For ``tau`` on ``A (x) B`` with invertible marginal ``A = tr_B(tau)`` the
Sylvester equation ``(A (x) 1) X + X (A (x) 1) = 2 tau`` has a unique
solution, and ``X`` is the Jamiolkowski matrix of the candidate channel.
A chain is recovered pair by pair from its nearest-neighbour marginals.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    TOL,
    AlgebraElement,
    TensorFactorization,
    block_eigenvalues,
    extended_jordan,
    partial_trace,
    selfadjoint_deviation,
    tensor_all,
    trace,
    unit,
)
from .channel import choi_matrix, is_cptp, jamiolkowski_inverse
from .errors import NotInTStar, NotSelfAdjoint, NumericalFailure, ShapeMismatch, SingularMarginal
from .nstep import ProcessChain

log = logging.getLogger(__name__)

FACTORIZATION_TOL = 1e-8
RESIDUAL_LIMIT = 1e-6


@dataclass(frozen=True)
class PseudoDensityOperator:
    value: AlgebraElement
    factorization: TensorFactorization


@dataclass
class PdoReport:
    ok: bool
    selfadjoint_deviation: float
    trace: complex
    # (factor index, min eigenvalue, trace) for every marginal that is not a state
    failing_marginals: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def is_pdo(t: AlgebraElement, f: TensorFactorization, tol: float = TOL) -> PdoReport:
    dev = selfadjoint_deviation(t)
    tr = trace(t)
    failing = []
    for i in range(len(f)):
        m = partial_trace(t, f, [i])
        low = float(block_eigenvalues(m).min())
        mtr = trace(m)
        if selfadjoint_deviation(m) > tol or low < -tol or abs(mtr - 1) > tol:
            failing.append((i, low, mtr))
    ok = dev <= tol and abs(tr - 1) <= tol and not failing
    return PdoReport(ok, dev, tr, failing)


@dataclass(frozen=True)
class SylvesterSolution:
    x: AlgebraElement
    residual: float
    spectrum_margin: float


def solve_sylvester(t: AlgebraElement, f: TensorFactorization, tol: float = TOL) -> SylvesterSolution:
    """Solve ``(A (x) 1) X + X (A (x) 1) = 2 t`` with ``A`` the marginal on the first factor."""
    if len(f) < 2:
        raise ShapeMismatch("need at least two tensor factors")
    marg = partial_trace(t, f, [0])
    if selfadjoint_deviation(marg) > tol:
        raise NotSelfAdjoint("first-factor marginal is not self-adjoint", deviation=selfadjoint_deviation(marg))
    h = 0.5 * (marg.matrix + marg.matrix.conj().T)
    lam, u = np.linalg.eigh(h)
    margin = float(block_eigenvalues(marg).min())
    if margin <= tol:
        raise SingularMarginal(f"marginal has eigenvalue {margin:.3g}", min_eigenvalue=margin)
    rest = int(t.algebra.dim // marg.algebra.dim)
    w = np.kron(u, np.eye(rest))
    mu = np.kron(lam, np.ones(rest))
    tt = w.conj().T @ t.matrix @ w
    x = w @ (2 * tt / (mu[:, None] + mu[None, :])) @ w.conj().T
    x = AlgebraElement(t.algebra, x)
    a = np.kron(marg.matrix, np.eye(rest))
    residual = float(np.linalg.norm(a @ x.matrix + x.matrix @ a - 2 * t.matrix, 2))
    if not np.isfinite(residual) or residual > RESIDUAL_LIMIT:
        raise NumericalFailure(f"Sylvester residual {residual:.3g} too large", residual=residual)
    return SylvesterSolution(x, residual, margin)


@dataclass
class PairReport:
    ok: bool
    pdo: PdoReport
    invertible: bool
    cptp: bool
    choi_min_eig: float = float("nan")
    residual: float = float("nan")
    spectrum_margin: float = float("nan")
    solution: SylvesterSolution = None

    def __bool__(self):
        return self.ok


def in_T_star_pair(t: AlgebraElement, f: TensorFactorization, tol: float = TOL) -> PairReport:
    if len(f) != 2:
        raise ShapeMismatch("pair test needs exactly two factors")
    pdo = is_pdo(t, f, tol)
    try:
        sol = solve_sylvester(t, f, tol)
    except (SingularMarginal, NotSelfAdjoint):
        return PairReport(False, pdo, False, False)
    channel = jamiolkowski_inverse(sol.x, *f.factors)
    cptp = is_cptp(channel, tol)
    ok = pdo.ok and cptp.ok
    return PairReport(ok, pdo, True, cptp.ok, cptp.witness, sol.residual, sol.spectrum_margin, sol)


@dataclass
class ChainReport:
    ok: bool
    pdo: PdoReport
    pairwise: list
    pairwise_ok: bool
    global_ok: bool
    global_deviation: float

    def __bool__(self):
        return self.ok


def in_T_star_chain(t: AlgebraElement, f: TensorFactorization, tol: float = TOL) -> ChainReport:
    """Both membership conditions, each with its own verdict."""
    if len(f) < 2:
        raise ShapeMismatch("chain test needs at least two factors")
    n = len(f) - 1
    pdo = is_pdo(t, f, tol)
    pairs = [in_T_star_pair(partial_trace(t, f, [i - 1, i]), f.sub([i - 1, i]), tol) for i in range(1, n + 1)]
    pairwise_ok = all(p.ok for p in pairs)

    global_ok, deviation = False, float("inf")
    if all(p.invertible for p in pairs):
        try:
            x_tau = solve_sylvester(t, f, tol).x
        except (SingularMarginal, NotSelfAdjoint):
            x_tau = None
        if x_tau is not None:
            padded = [
                tensor_all([unit(a) for a in f.factors[: i - 1]] + [p.solution.x] + [unit(a) for a in f.factors[i + 1 :]])
                for i, p in zip(range(1, n + 1), pairs)
            ]
            deviation = float(np.abs(extended_jordan(padded).matrix - x_tau.matrix).max())
            global_ok = deviation <= FACTORIZATION_TOL
    if pdo.ok and pairwise_ok != global_ok:
        log.warning("membership conditions disagree: pairwise=%s global=%s (deviation %.3g)", pairwise_ok, global_ok, deviation)
    return ChainReport(pdo.ok and pairwise_ok and global_ok, pdo, pairs, pairwise_ok, global_ok, deviation)


@dataclass
class ExtractionDiagnostics:
    cptp: list
    choi_min_eig: list
    residuals: list
    report: ChainReport


def extract_with_diagnostics(t: AlgebraElement, f: TensorFactorization, tol: float = TOL, force: bool = False):
    """Recovered chain plus per-channel diagnostics; see ``extract_process``."""
    report = in_T_star_chain(t, f, tol)
    if not report.ok and not force:
        raise NotInTStar(
            "element is not in the extractable class",
            pdo=report.pdo.ok,
            pairwise=report.pairwise_ok,
            global_factorization=report.global_ok,
            failing_marginals=report.pdo.failing_marginals,
        )
    channels, cptp, low, residuals = [], [], [], []
    for i in range(1, len(f)):
        pair = report.pairwise[i - 1]
        if not pair.invertible:
            marg = partial_trace(t, f, [i - 1])
            raise SingularMarginal(
                f"marginal on factor {i - 1} is not invertible",
                factor=i - 1,
                min_eigenvalue=float(block_eigenvalues(marg).min()),
            )
        e = jamiolkowski_inverse(pair.solution.x, f.factors[i - 1], f.factors[i])
        channels.append(e)
        cptp.append(pair.cptp)
        low.append(float(block_eigenvalues(choi_matrix(e)).min()))
        residuals.append(pair.residual)
    chain = ProcessChain(partial_trace(t, f, [0]), channels)
    return chain, ExtractionDiagnostics(cptp, low, residuals, report)


def extract_process(t: AlgebraElement, f: TensorFactorization, tol: float = TOL, force: bool = False) -> ProcessChain:
    """``(tr_0 t, J^-1(X_1), ..., J^-1(X_n))`` with ``X_i`` solved from the i-th pair marginal.

    Raises ``NotInTStar`` unless ``t`` passes both membership conditions or
    ``force`` is set.
    """
    return extract_with_diagnostics(t, f, tol, force)[0]
