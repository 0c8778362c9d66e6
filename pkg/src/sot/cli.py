"""Command line front end: ``sot compute|extract|validate|spectrum|classical``.

Every command reads one JSON file and writes one JSON document. Diagnostics
go to stderr as one JSON object per line. Exit status: 0 success, 1 input
could not be parsed, 2 a mathematical precondition failed, 3 numerical
failure.
"""
import argparse
import json
import math
import os
import sys
from itertools import product

import numpy as np

from .algebra import (
    TOL,
    TensorFactorization,
    descriptor_from_json,
    descriptor_to_json,
    element_from_json,
    element_to_json,
    is_selfadjoint,
    is_state,
    partial_trace,
    selfadjoint_deviation,
    spectrum,
    trace,
)
from .bloom import LEFT, RIGHT, SYMMETRIC, BloomKind
from .channel import apply, channel_from_json, channel_to_json, is_cptp
from .classical import (
    ProbDist,
    StochasticMap,
    as_element,
    classical_chain_extract,
    classical_chain_joint,
    q_embed,
)
from .errors import NotSelfAdjoint, NumericalFailure, ParseError, SotError
from .extract import extract_with_diagnostics, in_T_star_chain, is_pdo
from .nstep import ProcessChain, as_tree, bloom_paren, left_comb, yinyang
from .qubit_pdo import negativity_witness

KINDS = {"symmetric": SYMMETRIC, "right": RIGHT, "left": LEFT}


# output


def _number(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise NumericalFailure("non-finite number in output")
    s = format(x, ".17g")
    return s if any(c in s for c in ".en") else s + ".0"


def _scalar(x) -> str:
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return _number(x)
    if isinstance(x, str):
        return json.dumps(x, ensure_ascii=False)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def dumps(obj, indent: int = 2, level: int = 0) -> str:
    """JSON with every float written to 17 significant digits; flat lists stay on one line."""
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if isinstance(obj, dict):
        if all(not isinstance(v, (dict, list, tuple)) for v in obj.values()):
            return "{" + ", ".join(f"{json.dumps(str(k))}: {_scalar(v)}" for k, v in obj.items()) + "}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(_scalar(v) for v in obj) + "]"
        items = [inner + dumps(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    return _scalar(obj)


def _complex(z) -> dict:
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def _diag(payload):
    sys.stderr.write(json.dumps(payload, sort_keys=True, default=str) + "\n")


def _warn(message, **details):
    _diag({"level": "warning", "message": message, **details})


# input


def _reject_constant(name):
    raise ValueError(f"non-finite literal {name} not allowed")


def _load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh, parse_constant=_reject_constant)
    except (OSError, ValueError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None


def _parsing(fn, *args):
    """Run a JSON-to-object conversion, reporting malformed input as a parse error."""
    try:
        return fn(*args)
    except SotError:
        raise
    except (KeyError, TypeError, ValueError, IndexError, AttributeError) as exc:
        raise ParseError(f"malformed input: {type(exc).__name__}: {exc}") from None


def _factorization(data):
    return TensorFactorization([descriptor_from_json(f) for f in data["factors"]])


def _read_process(data):
    rho = element_from_json(data["rho"])
    return ProcessChain(rho, [channel_from_json(c) for c in data["channels"]])


def _read_pdo(data):
    f = _factorization(data)
    return element_from_json(data, f.composite), f


def _tolerance(args) -> float:
    if args.tol is not None:
        tol = args.tol
    elif os.environ.get("SOT_TOL"):
        try:
            tol = float(os.environ["SOT_TOL"])
        except ValueError:
            raise ParseError(f"SOT_TOL is not a number: {os.environ['SOT_TOL']!r}") from None
    else:
        tol = TOL
    if not tol > 0:
        raise ParseError(f"tolerance must be positive, got {tol}")
    return tol


def _kind(args) -> BloomKind:
    if args.kind == "lambda":
        if args.lam is None:
            raise ParseError("--kind lambda requires --lambda")
        return BloomKind(args.lam)
    if args.lam is not None:
        raise ParseError("--lambda is only valid with --kind lambda")
    return KINDS[args.kind]


# commands


def cmd_compute(data, args, tol):
    chain = _parsing(_read_process, data)
    kind = _kind(args)
    tree = _parsing(lambda s: as_tree(json.loads(s)), args.paren) if args.paren else None
    if not is_state(chain.rho, tol):
        _warn("initial element is not a state")
    for i, e in enumerate(chain.channels, 1):
        check = is_cptp(e, tol)
        if not check:
            _warn("channel is not CPTP", channel=i, choi_min_eig=check.witness, trace_deviation=check.detail["trace_deviation"])
    if kind != SYMMETRIC:
        _warn(f"{kind.name} bloom selected; only the symmetric bloom guarantees self-adjoint output")
    if kind == SYMMETRIC and tree is None:
        tau = yinyang(chain)
    else:
        tau = apply(bloom_paren(tree if tree is not None else left_comb(chain.n), chain.channels, kind), chain.rho)
    f = chain.factorization
    report = {
        "kind": kind.name,
        "lambda": _complex(kind.lam),
        "trace": _complex(trace(tau)),
        "hermiticity_deviation": selfadjoint_deviation(tau),
        "marginal_deviations": [
            float(np.abs(partial_trace(tau, f, [i]).matrix - s.matrix).max()) for i, s in enumerate(chain.states)
        ],
        "min_eigenvalue": None,
        "negativity": None,
    }
    if is_selfadjoint(tau, tol):
        neg = negativity_witness(tau, tol)
        report["min_eigenvalue"] = neg.min_eigenvalue
        report["negativity"] = neg.negativity
    out = element_to_json(tau)
    out["factors"] = [descriptor_to_json(a) for a in f.factors]
    out["report"] = report
    return out


def cmd_extract(data, args, tol):
    tau, f = _parsing(_read_pdo, data)
    chain, diag = extract_with_diagnostics(tau, f, tol, force=args.force)
    for i, ok in enumerate(diag.cptp, 1):
        if not ok:
            _warn("extracted channel is not CPTP", channel=i, choi_min_eig=diag.choi_min_eig[i - 1])
    report = diag.report
    return {
        "rho": element_to_json(chain.rho),
        "channels": [channel_to_json(e) for e in chain.channels],
        "diagnostics": {
            "cptp": diag.cptp,
            "choi_min_eig": diag.choi_min_eig,
            "residuals": diag.residuals,
            "pdo": report.pdo.ok,
            "pairwise": report.pairwise_ok,
            "global_factorization": report.global_ok,
            "global_deviation": report.global_deviation if math.isfinite(report.global_deviation) else None,
        },
    }


def cmd_validate(data, args, tol):
    if "factors" in data:
        x, f = _parsing(_read_pdo, data)
    else:
        x = _parsing(element_from_json, data)
        f = TensorFactorization([x.algebra])
    out = {
        "selfadjoint": is_selfadjoint(x, tol),
        "trace": _complex(trace(x)),
        "state": is_state(x, tol),
    }
    pdo = is_pdo(x, f, tol)
    out["pdo"] = pdo.ok
    out["failing_marginals"] = [{"factor": i, "min_eigenvalue": low, "trace": _complex(t)} for i, low, t in pdo.failing_marginals]
    if len(f) >= 2:
        r = in_T_star_chain(x, f, tol)
        out["t_star"] = {"member": r.ok, "pairwise": r.pairwise_ok, "global_factorization": r.global_ok}
    return out


def cmd_spectrum(data, args, tol):
    x = _parsing(lambda d: element_from_json(d) if "factors" not in d else _read_pdo(d)[0], data)
    if not is_selfadjoint(x, tol):
        raise NotSelfAdjoint("spectrum needs a self-adjoint element", deviation=selfadjoint_deviation(x))
    neg = negativity_witness(x, tol)
    return {"eigenvalues": spectrum(x).tolist(), "min_eigenvalue": neg.min_eigenvalue, "negativity": neg.negativity}


def _classical_forward(data):
    p = ProbDist(data["distribution"]["set"], data["distribution"]["weights"])
    maps = [StochasticMap(m["source"], m["target"], m["probs"]) for m in data["maps"]]
    return p, maps


def _classical_backward(data):
    sets = [list(map(str, s)) for s in data["sets"]]
    weights = np.asarray(data["joint"]["weights"], dtype=float)
    return sets, weights.reshape([len(s) for s in sets])


def cmd_classical(data, args, tol):
    if "maps" in data:
        p, maps = _parsing(_classical_forward, data)
        joint = classical_chain_joint(p, maps)
        sets = [list(p.set)] + [list(f.target) for f in maps]
        # the same joint through the quantum route: diagonal of the state over time
        tau = yinyang(ProcessChain(as_element(p), [q_embed(f) for f in maps]))
        deviation = float(np.abs(tau.matrix - np.diag(joint.reshape(-1))).max())
        return {
            "sets": sets,
            "joint": {
                "set": ["(" + ",".join(xs) + ")" for xs in product(*sets)],
                "weights": joint.reshape(-1).tolist(),
            },
            "quantum_route_deviation": deviation,
        }
    sets, joint = _parsing(_classical_backward, data)
    p, maps = classical_chain_extract(joint, sets)
    return {
        "distribution": {"set": list(p.set), "weights": p.weights.tolist()},
        "maps": [{"source": list(f.source), "target": list(f.target), "probs": f.probs.tolist()} for f in maps],
    }


COMMANDS = {
    "compute": cmd_compute,
    "extract": cmd_extract,
    "validate": cmd_validate,
    "spectrum": cmd_spectrum,
    "classical": cmd_classical,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--in", dest="input", required=True, help="input JSON file")
    common.add_argument("--out", dest="output", help="output JSON file (default: stdout)")
    common.add_argument("--tol", type=float, default=None, help="numerical tolerance (default $SOT_TOL or 1e-9)")
    parser = _Parser(prog="sot", description="States over time for quantum processes.")
    sub = parser.add_subparsers(dest="command", required=True)
    compute = sub.add_parser("compute", parents=[common], help="state over time of a process")
    compute.add_argument("--kind", choices=["symmetric", "right", "left", "lambda"], default="symmetric")
    compute.add_argument("--lambda", dest="lam", type=float, default=None, help="weight for --kind lambda")
    compute.add_argument("--paren", default=None, help='parenthesization as nested JSON arrays, e.g. "[[0,1],2]"')
    extract = sub.add_parser("extract", parents=[common], help="recover the process behind a pseudo-density operator")
    extract.add_argument("--force", action="store_true", help="extract even when the membership test fails")
    sub.add_parser("validate", parents=[common], help="pseudo-density operator checks")
    sub.add_parser("spectrum", parents=[common], help="eigenvalues and negativity")
    sub.add_parser("classical", parents=[common], help="Markov chain to joint distribution and back")
    return parser


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        tol = _tolerance(args)
        data = _load(args.input)
        if not isinstance(data, dict):
            raise ParseError("top-level JSON value must be an object")
        text = dumps(COMMANDS[args.command](data, args, tol)) + "\n"
    except SotError as exc:
        _diag({"level": "error", "error": type(exc).__name__, "message": str(exc), "details": exc.details})
        return exc.exit_code
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main():
    sys.exit(run())
