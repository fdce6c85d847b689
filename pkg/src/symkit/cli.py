"""Command line front end.

Subcommands: solve, bracket, adjoint, schrodinger, evolution.  Problem
files use the .pde DSL (see dsl module); results are printed as small
tables and optionally written as versioned JSON with every number rendered
as an exact string.  Exit codes: 0 success, 2 input error, 3 internal
invariant violation.  Set SYMKIT_LOG=DEBUG|INFO|WARNING for diagnostics.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Dict, List, Optional, Sequence, Tuple

from . import casestudies
from .dsl import ProblemFile, parse, render
from .errors import (
    DslSyntaxError,
    OrderOverflow,
    NotSolvedForm,
    SemanticError,
    SymkitError,
    VariableMismatch,
)
from .field import GaussRat, ZERO, as_gauss
from .jet import (
    GenVectorField,
    JetContext,
    PdeSystem,
    apply_on_solutions,
    evolution_determining_solve,
    jet_order,
    lie_bracket,
)
from .linop import LinDiffOp, OperatorPde, commutator, operator_determining_solve
from .poly import Context, ExpPoly, Var
from .structure import SymmetrySpace, structured_basis

log = logging.getLogger("symkit.cli")

SCHEMA_VERSION = 1

INPUT_ERRORS = (
    DslSyntaxError,
    SemanticError,
    VariableMismatch,
    OrderOverflow,
    NotSolvedForm,
    FileNotFoundError,
    IsADirectoryError,
    ValueError,
)


# ---------------------------------------------------------------------------
# problem routing
# ---------------------------------------------------------------------------

def detect_route(problem: ProblemFile) -> str:
    """'evolution' for solved-form u_t = G, else 'operator'."""
    lhs = problem.lhs
    flat = lhs.flatten()
    if len(flat) == 1:
        ((w, exps), coeff), = flat.items()
        if not any(w) and coeff == as_gauss(1):
            hot = [(i, e) for i, e in enumerate(exps) if e]
            if len(hot) == 1 and hot[0][1] == 1:
                info = problem.jctx.jet_info(hot[0][0])
                if info is not None and sum(info[1]) == 1:
                    axis = info[1].index(1)
                    rhs_ok = True
                    for idx in problem.rhs.support():
                        jinfo = problem.jctx.jet_info(idx)
                        if jinfo is not None and jinfo[1][axis]:
                            rhs_ok = False
                    if rhs_ok:
                        return "evolution"
    return "operator"


def problem_to_operator_pde(problem: ProblemFile) -> OperatorPde:
    """Convert a linear constant-structure equation to a defining operator."""
    jctx = problem.jctx
    if len(problem.unknowns) != 1:
        raise SemanticError("operator route needs exactly one unknown")
    for name in problem.translations:
        if name not in problem.axes:
            raise SemanticError("operator route translations must be axes")
    F = problem.lhs - problem.rhs
    ctx = Context([Var(a) for a in problem.axes], translations=problem.translations)
    axis_positions = [jctx.ctx.index(a) for a in problem.axes]
    terms: Dict[tuple, ExpPoly] = {}
    for w, exps, coeff in F.coeff_extract():
        if any(w):
            raise SemanticError("equation expressions cannot carry weights")
        jet_hits = []
        axis_exps = [0] * len(problem.axes)
        for i, e in enumerate(exps):
            if not e:
                continue
            info = jctx.jet_info(i)
            if info is None:
                axis_exps[axis_positions.index(i)] = e
            else:
                jet_hits.append((info, e))
        if len(jet_hits) != 1 or jet_hits[0][1] != 1:
            raise SemanticError(
                "operator route needs an equation linear and homogeneous "
                "in the unknown"
            )
        (alpha, J), _ = jet_hits[0]
        if alpha != 0:
            raise SemanticError("operator route needs exactly one unknown")
        mono = ExpPoly.monomial(ctx, coeff, tuple(axis_exps))
        key = tuple(J)
        terms[key] = terms.get(key, ExpPoly.zero(ctx)) + mono
    L = LinDiffOp(ctx, {J: c for J, c in terms.items() if not c.is_zero})
    last_error: Optional[Exception] = None
    for axis in problem.axes:
        try:
            return OperatorPde(L, axis)
        except ValueError as exc:
            last_error = exc
    raise SemanticError(f"no usable evolution axis in the defining operator: {last_error}")


def problem_to_evolution(problem: ProblemFile, order: int) -> PdeSystem:
    """Rebuild the solved-form system with enough jet-order headroom."""
    jctx = problem.jctx
    flat = problem.lhs.flatten()
    ((_, exps), _), = flat.items()
    var_index = next(i for i, e in enumerate(exps) if e)
    alpha, J = jctx.jet_info(var_index)
    axis = J.index(1)
    d = jet_order(problem.rhs, jctx)
    work = JetContext(
        problem.axes,
        problem.unknowns,
        max(order + d + 1, jctx.max_order),
        problem.translations,
    )
    rhs = problem.rhs.embed(work.ctx)
    return PdeSystem.evolution(work, rhs, unknown=alpha, axis=axis)


# ---------------------------------------------------------------------------
# shared JSON helpers
# ---------------------------------------------------------------------------

def _weights_json(weights: Sequence[GaussRat]) -> List[str]:
    return [str(w) for w in weights]


def _matrix_json(mat) -> List[List[str]]:
    return [[str(x) for x in row] for row in mat.data]


def _write_output(payload: dict, json_path: Optional[str]):
    text = json.dumps(payload, indent=2)
    if json_path:
        with open(json_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        log.info("wrote %s", json_path)
    else:
        print(text)


def _parse_weight_list(raw: Optional[str], slots: int) -> List[Tuple[GaussRat, ...]]:
    """Parse a --lambda flag via the task-option grammar."""
    if raw is None:
        return [(ZERO,) * slots]
    from .dsl import tokenize, _Parser

    parser = _Parser(tokenize(f"task solve lambda={raw};"))
    parser.expect("ident")
    task = parser.parse_task()
    out = []
    for entry in task.lambdas or ():
        if len(entry) == 1 and slots > 1:
            entry = entry * slots
        if len(entry) != slots:
            raise SemanticError(
                f"weight entry has {len(entry)} components, expected {slots}"
            )
        out.append(tuple(entry))
    return out


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _load_problem(path: str) -> ProblemFile:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())


def cmd_solve(args) -> int:
    problem = _load_problem(args.file)
    task = problem.task
    order = args.order if args.order is not None else (task.order if task.order is not None else 2)
    route = detect_route(problem)
    caps = tuple(args.caps) if args.caps else (task.caps or None)
    payload: dict = {
        "schema": SCHEMA_VERSION,
        "problem": render(problem).splitlines(),
        "route": route,
        "task": {"order": order},
    }
    if route == "operator":
        pde = problem_to_operator_pde(problem)
        slots = pde.ctx.ntrans
        if args.lam is not None:
            weight_list = _parse_weight_list(args.lam, slots)
        elif task.lambdas is not None:
            weight_list = [
                w if len(w) == slots else tuple(list(w) * slots)[:slots]
                for w in task.lambdas
            ]
        else:
            weight_list = [(ZERO,) * slots]
        dim_bound = casestudies.schrodinger_dimension(order)
        results = []
        verified = True
        for weights in weight_list:
            if caps is None:
                basis = operator_determining_solve(pde, order, weights, dim_bound=dim_bound)
            else:
                basis = operator_determining_solve(pde, order, weights, caps=list(caps))
            if args.verify:
                for op in basis:
                    if not pde.is_symmetry(op):
                        verified = False
            results.append(
                {
                    "lambda": _weights_json(weights),
                    "dimension": len(basis),
                    "elements": [op.to_json() for op in basis],
                    "rendered": [op.render() for op in basis],
                }
            )
            print(f"weights ({', '.join(_weights_json(weights))}): dimension {len(basis)}")
            for op in basis:
                print(f"  {op.render()}")
        payload["results"] = results
        payload["verification"] = {
            "checked": args.verify,
            "all_commutators_zero": verified if args.verify else None,
        }
        if args.verify and not verified:
            raise SymkitError("verification failed: nonzero reduced commutator")
    else:
        sys_ = problem_to_evolution(problem, order)
        jet_cap, poly_cap = _evolution_caps(caps, order)
        if args.lam is not None:
            weight_list = _parse_weight_list(args.lam, 1)
        elif task.lambdas is not None:
            weight_list = list(task.lambdas)
        else:
            weight_list = [(ZERO,)]
        results = []
        verified = True
        for (lam,) in weight_list:
            basis = evolution_determining_solve(sys_, order, jet_cap, poly_cap, lam)
            if args.verify:
                for eta in basis:
                    field_ = GenVectorField.evolutionary(sys_.jctx, eta)
                    if any(not r.is_zero for r in apply_on_solutions(field_, sys_)):
                        verified = False
            results.append(
                {
                    "lambda": [str(lam)],
                    "dimension": len(basis),
                    "elements": [eta.to_json() for eta in basis],
                    "rendered": [eta.render() for eta in basis],
                }
            )
            print(f"lambda {lam}: dimension {len(basis)}")
            for eta in basis:
                print(f"  {eta.render()}")
        payload["task"]["caps"] = [jet_cap, poly_cap]
        payload["results"] = results
        payload["verification"] = {
            "checked": args.verify,
            "all_residuals_zero": verified if args.verify else None,
        }
        if args.verify and not verified:
            raise SymkitError("verification failed: nonzero residual")
    _write_output(payload, args.json)
    return 0


def _evolution_caps(caps, order) -> Tuple[int, int]:
    if caps is None:
        bound = casestudies.schrodinger_dimension(order) - 1
        return (1, max(bound, 1))
    if len(caps) == 1:
        return (caps[0], caps[0])
    return (caps[0], caps[1])


# ---------------------------------------------------------------------------
# adjoint (structure pipeline)
# ---------------------------------------------------------------------------

def cmd_adjoint(args) -> int:
    problem = _load_problem(args.file)
    task = problem.task
    order = args.order if args.order is not None else (task.order if task.order is not None else 2)
    route = detect_route(problem)
    caps = tuple(args.caps) if args.caps else (task.caps or None)
    if not problem.translations:
        raise SemanticError("adjoint pipeline needs declared translation variables")
    if route == "operator":
        pde = problem_to_operator_pde(problem)
        bases = {}
        for q in range(order + 1):
            if caps is None:
                bases[q] = operator_determining_solve(
                    pde, q, dim_bound=casestudies.schrodinger_dimension(q)
                )
            else:
                bases[q] = operator_determining_solve(pde, q, caps=list(caps))
        space = SymmetrySpace.build("operator", pde.ctx, bases, problem.translations)
    else:
        sys_ = problem_to_evolution(problem, order)
        jet_cap, poly_cap = _evolution_caps(caps, order)
        bases = {
            q: evolution_determining_solve(sys_, q, jet_cap, poly_cap, ZERO)
            for q in range(order + 1)
        }
        space = SymmetrySpace.build(
            "evolutionary", sys_.jctx.ctx, bases, problem.translations
        )
    sb = structured_basis(space)
    payload = {
        "schema": SCHEMA_VERSION,
        "problem": render(problem).splitlines(),
        "route": route,
        "task": {"order": order},
        "space": {
            "dimension": space.dim,
            "levels": [[q, v] for q, v in space.levels],
        },
        "adjoint_matrices": {
            name: _matrix_json(space.adjoint_matrix(name))
            for name in problem.translations
        },
        "blocks": [
            {
                "r": blk.dim,
                "lambda": {k: str(v) for k, v in blk.eigenvalues.items()},
                "k": dict(blk.bounds),
                "elements": [el.render() for el in blk.elements],
            }
            for blk in sb.blocks
        ],
        "verification": {
            "matrices_commute": True,
            "span_preserved": True,
            "degree_bounds_hold": True,
        },
    }
    print(f"space dimension {space.dim}; {sb.rho} block(s)")
    for blk in sb.blocks:
        lam = ", ".join(f"{k}={v}" for k, v in blk.eigenvalues.items())
        ks = ", ".join(f"k_{k}={v}" for k, v in blk.bounds.items())
        print(f"  block r={blk.dim}  {lam}  {ks}")
    _write_output(payload, args.json)
    return 0


# ---------------------------------------------------------------------------
# bracket
# ---------------------------------------------------------------------------

def _load_symmetry(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if data.get("schema") != SCHEMA_VERSION:
        raise SemanticError(f"{path}: unsupported schema {data.get('schema')!r}")
    if data.get("kind") not in ("evolutionary", "operator"):
        raise SemanticError(f"{path}: unknown symmetry kind {data.get('kind')!r}")
    return data


def cmd_bracket(args) -> int:
    a = _load_symmetry(args.file_a)
    b = _load_symmetry(args.file_b)
    if a["kind"] != b["kind"]:
        raise SemanticError("cannot bracket symmetries of different kinds")
    if a["kind"] == "operator":
        if a["axes"] != b["axes"] or a.get("translations") != b.get("translations"):
            raise SemanticError("operator symmetries live in different contexts")
        ctx = Context([Var(x) for x in a["axes"]], translations=a.get("translations", ()))
        op_a = LinDiffOp.from_json(ctx, a["terms"])
        op_b = LinDiffOp.from_json(ctx, b["terms"])
        out = commutator(op_a, op_b)
        payload = {
            "schema": SCHEMA_VERSION,
            "kind": "operator",
            "axes": list(a["axes"]),
            "translations": list(a.get("translations", ())),
            "terms": out.to_json(),
            "rendered": out.render(),
        }
        print(out.render())
    else:
        for key in ("axes", "unknowns", "translations"):
            if a.get(key) != b.get(key):
                raise SemanticError("evolutionary symmetries live in different contexts")
        order_a = int(a["max_order"])
        order_b = int(b["max_order"])
        work = JetContext(
            a["axes"], a["unknowns"], order_a + order_b + 1, a.get("translations", ())
        )
        eta_a = _characteristic_from_json(a, work)
        eta_b = _characteristic_from_json(b, work)
        qa = GenVectorField.evolutionary(work, eta_a)
        qb = GenVectorField.evolutionary(work, eta_b)
        out_field = lie_bracket(qa, qb)
        eta = out_field.eta[0]
        payload = {
            "schema": SCHEMA_VERSION,
            "kind": "evolutionary",
            "axes": list(a["axes"]),
            "unknowns": list(a["unknowns"]),
            "translations": list(a.get("translations", ())),
            "max_order": jet_order(eta, work),
            "characteristic": _characteristic_to_json(eta, work),
            "rendered": eta.render(),
        }
        print(eta.render())
    _write_output(payload, args.json)
    return 0


def _characteristic_from_json(data: dict, work: JetContext) -> ExpPoly:
    source = JetContext(
        data["axes"], data["unknowns"], int(data["max_order"]), data.get("translations", ())
    )
    eta = ExpPoly.from_json(source.ctx, data["characteristic"])
    return eta.embed(work.ctx)


def _characteristic_to_json(eta: ExpPoly, work: JetContext) -> list:
    packed = JetContext(
        work.axes, work.unknowns, max(jet_order(eta, work), 0), work._translations
    )
    return eta.embed(packed.ctx).to_json()


def symmetry_json_evolutionary(eta: ExpPoly, jctx: JetContext) -> dict:
    """Stored-symmetry payload for a characteristic (stable across runs)."""
    return {
        "schema": SCHEMA_VERSION,
        "kind": "evolutionary",
        "axes": list(jctx.axes),
        "unknowns": list(jctx.unknowns),
        "translations": list(jctx._translations),
        "max_order": jet_order(eta, jctx),
        "characteristic": _characteristic_to_json(eta, jctx),
        "rendered": eta.render(),
    }


def symmetry_json_operator(op: LinDiffOp) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "kind": "operator",
        "axes": [v.name for v in op.ctx.vars],
        "translations": list(op.ctx.translation_names()),
        "terms": op.to_json(),
        "rendered": op.render(),
    }


# ---------------------------------------------------------------------------
# schrodinger case study
# ---------------------------------------------------------------------------

def cmd_schrodinger(args) -> int:
    qmax = args.qmax if args.qmax is not None else 2
    rows = []
    for q in range(qmax + 1):
        rep = casestudies.cross_validate(q)
        rows.append(rep)
    print("q  dimension  formula  routes-agree  bidegrees")
    for rep in rows:
        formula = casestudies.schrodinger_dimension(rep.q)
        print(
            f"{rep.q}  {rep.dimension:9d}  {formula:7d}  {str(rep.spans_agree):>12s}  "
            f"{str(rep.bidegrees_ok):>9s}"
        )
    payload: dict = {
        "schema": SCHEMA_VERSION,
        "case": "free_schrodinger",
        "qmax": qmax,
        "dimensions": [
            {
                "q": rep.q,
                "dimension": rep.dimension,
                "formula": casestudies.schrodinger_dimension(rep.q),
                "recurrence_dimension": rep.recurrence_dimension,
                "ansatz_dimension": rep.ansatz_dimension,
                "spans_agree": rep.spans_agree,
                "bidegrees_ok": rep.bidegrees_ok,
            }
            for rep in rows
        ],
    }
    if args.scan:
        scan = casestudies.weight_scan()
        payload["scan"] = [
            {
                "q": q,
                "lambda": str(w[0]),
                "mu": str(w[1]),
                "dimension": dim,
            }
            for (q, w), dim in sorted(
                scan.items(), key=lambda kv: (kv[0][0], [x.sort_key() for x in kv[0][1]])
            )
        ]
        worst = max(scan.values())
        print(f"nonzero-weight scan: {len(scan)} points, max dimension {worst}")
    if args.structure:
        sb = casestudies.schrodinger_structure(qmax)
        payload["structure"] = {
            "blocks": [
                {
                    "r": blk.dim,
                    "lambda": {k: str(v) for k, v in blk.eigenvalues.items()},
                    "k": dict(blk.bounds),
                }
                for blk in sb.blocks
            ]
        }
    if args.verify:
        pde = casestudies.free_schrodinger()
        ok = all(
            pde.is_symmetry(op)
            for q in range(qmax + 1)
            for op in casestudies.ansatz_route(q)
        )
        payload["verification"] = {"all_commutators_zero": ok}
        if not ok:
            raise SymkitError("verification failed: nonzero reduced commutator")
    _write_output(payload, args.json)
    return 0


# ---------------------------------------------------------------------------
# evolution case study
# ---------------------------------------------------------------------------

def cmd_evolution(args) -> int:
    problem = _load_problem(args.file)
    task = problem.task
    order = args.order if args.order is not None else (task.order if task.order is not None else 2)
    caps = tuple(args.caps) if args.caps else (task.caps or None)
    jet_cap, poly_cap = _evolution_caps(caps, order)
    if detect_route(problem) != "evolution":
        raise SemanticError("evolution case study needs a solved-form equation u_t = G")
    sys_ = problem_to_evolution(problem, order)
    if args.lam is not None:
        lambdas = [w[0] for w in _parse_weight_list(args.lam, 1) if w[0]]
    elif task.lambdas is not None:
        lambdas = [w[0] for w in task.lambdas if w[0]]
    else:
        lambdas = list(casestudies.EVOLUTION_LAMBDA_SAMPLES)
    report = casestudies.evolution_case(sys_, order, jet_cap, poly_cap, lambdas)
    results = []
    for lam in [ZERO] + [as_gauss(x) for x in lambdas]:
        basis = report.bases[lam]
        print(f"lambda {lam}: dimension {len(basis)}")
        for eta in basis:
            print(f"  {eta.render()}")
        results.append(
            {
                "lambda": str(lam),
                "dimension": len(basis),
                "elements": [eta.to_json() for eta in basis],
                "rendered": [eta.render() for eta in basis],
            }
        )
    payload = {
        "schema": SCHEMA_VERSION,
        "problem": render(problem).splitlines(),
        "route": "evolution",
        "task": {"order": order, "caps": [jet_cap, poly_cap]},
        "results": results,
        "verification": {
            "residuals_zero": report.residuals_zero,
            "nonzero_weights_empty": report.nonzero_weights_empty,
            "constant_leading_top_order": {
                str(k): v for k, v in sorted(
                    report.constant_leading_top_order.items(),
                    key=lambda kv: kv[0].sort_key(),
                )
            },
            "max_explicit_degree": report.max_explicit_degree,
            "degree_bound": max(
                len(report.bases[ZERO]) - 1, report.max_explicit_degree
            ),
        },
    }
    _write_output(payload, args.json)
    return 0


# ---------------------------------------------------------------------------
# argument parsing and dispatch
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser, with_file=True):
    if with_file:
        p.add_argument("file", help="problem file (.pde)")
    p.add_argument("--order", "-q", type=int, default=None, help="jet/operator order")
    p.add_argument(
        "--caps",
        type=lambda s: [int(x) for x in s.split(",")],
        default=None,
        help="degree caps (comma separated)",
    )
    p.add_argument(
        "--lambda",
        dest="lam",
        default=None,
        help="exponential weights, e.g. 0 or 1,-1,i or (1,0),(0,i)",
    )
    p.add_argument("--json", default=None, help="write JSON result to this path")
    p.add_argument("--verify", action="store_true", help="re-check outputs with the oracle")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symkit",
        description="Exact generalized-symmetry computations for PDEs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the determining solver on a problem file")
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("adjoint", help="symmetry space, translation matrices, blocks")
    _add_common(p)
    p.set_defaults(func=cmd_adjoint)

    p = sub.add_parser("bracket", help="Lie bracket / commutator of stored symmetries")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("--json", default=None)
    p.set_defaults(func=cmd_bracket)

    p = sub.add_parser("schrodinger", help="built-in free Schrodinger case study")
    p.add_argument("--qmax", type=int, default=None)
    p.add_argument("--scan", action="store_true", help="scan nonzero weight pairs")
    p.add_argument("--structure", action="store_true", help="include block structure")
    p.add_argument("--json", default=None)
    p.add_argument("--verify", action="store_true")
    p.set_defaults(func=cmd_schrodinger)

    p = sub.add_parser("evolution", help="evolution-equation case study")
    _add_common(p)
    p.set_defaults(func=cmd_evolution)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    level = os.environ.get("SYMKIT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SymkitError, ArithmeticError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
