"""Command-line front end.

Verbs: validate, paths, simulate, reduce, tree, check-independence,
check-unitary, factor, demo. Machine output is JSON on stdout
(``--format table`` switches the report verbs to aligned text);
diagnostics go to stderr. Exit codes: 0 success, 1 malformed input,
2 validation violations, 3 a requested check failed.

The environment variable MEASTREE_TOL, when set to a float, overrides
the validation tolerances (completeness, hermiticity, positivity) for
the whole invocation.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Any

import numpy as np

from .circuits import (
    Circuit,
    InvalidCircuitError,
    Path,
    enumerate_paths,
    flattened_gates,
    simulate_path,
    validate_circuit,
)
from .demos import DEMOS
from .independence import (
    check_computes,
    check_independence,
    check_isometry_scaling,
    factor_branch,
)
from .linalg import (
    TOL,
    DensityOperator,
    HilbertSpec,
    configure_tolerances,
    partial_trace_matrix,
    permute_ket,
    permute_wires,
    projector,
)
from .reduction import linearize, reduce_circuit
from .serialize import (
    circuit_from_json,
    circuit_to_json,
    matrix_from_json,
    matrix_to_json,
    measurement_from_json,
    state_from_json,
    tree_from_json,
    tree_to_dot,
    tree_to_json,
    vector_to_json,
)
from .trees import MeasurementTree, route_label, run_tree, validate_tree

EXIT_OK = 0
EXIT_MALFORMED = 1
EXIT_INVALID = 2
EXIT_CHECK_FAILED = 3

__all__ = ["main", "parse_path_spec"]


def _load_json(path: str) -> Any:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _print_json(payload: Any) -> None:
    print(json.dumps(payload, indent=2))


def _table(rows: list[list[str]], header: list[str]) -> list[str]:
    all_rows = [header] + rows
    widths = [max(len(r[i]) for r in all_rows) for i in range(len(header))]
    lines = []
    for r in all_rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
    return lines


def _matrix_lines(m: np.ndarray, indent: str = "    ") -> list[str]:
    text = np.array2string(np.round(m, 9), precision=6, suppress_small=True)
    return [indent + line for line in text.splitlines()]


def parse_path_spec(c: Circuit, text: str) -> Path:
    """Parse "gate=outcome,gate=outcome" and complete the forced outcomes.

    Gates left unmentioned are filled in automatically when the
    measurement selected for them has a single outcome; a gate with a
    real choice must be pinned explicitly.
    """
    given: dict[str, str] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"path: expected gate=outcome, got {part!r}")
        gid, label = (s.strip() for s in part.split("=", 1))
        if gid not in c.gates:
            raise ValueError(f"path: unknown gate {gid!r}")
        if gid in given:
            raise ValueError(f"path: gate {gid!r} pinned twice")
        given[gid] = label

    assignment: dict[str, str] = {}
    for gid in flattened_gates(c):
        g = c.gates[gid]
        m = g.measurement_for({s: assignment[s] for s in g.classical_sources})
        if m is None:
            raise ValueError(f"path: no measurement selected for gate {gid!r}")
        if gid in given:
            if given[gid] not in m.outcomes:
                raise ValueError(
                    f"path: gate {gid!r} has no outcome {given[gid]!r} here "
                    f"(options: {', '.join(m.labels)})"
                )
            assignment[gid] = given[gid]
        elif len(m.labels) == 1:
            assignment[gid] = m.labels[0]
        else:
            raise ValueError(
                f"path: gate {gid!r} is ambiguous; pin one of: {', '.join(m.labels)}"
            )
    return Path(assignment)


def _path_json(c: Circuit, path: Path) -> dict[str, str]:
    return {gid: path[gid] for gid in flattened_gates(c)}


def _load_valid_circuit(path: str) -> Circuit:
    c = circuit_from_json(_load_json(path))
    c.require_valid()
    return c


def _principal_density(c: Circuit, kind: str, arr: np.ndarray) -> DensityOperator:
    if kind == "ket":
        return DensityOperator.of(projector(arr), c.principal_spec)
    return DensityOperator.of(arr, c.principal_spec)


def _tree_input(t: MeasurementTree, kind: str, arr: np.ndarray) -> DensityOperator:
    """Accept a principal-space state (when the tree has roles) or a full one."""
    n = arr.shape[0]
    if t.has_roles():
        d_p = math.prod(t.space.dim_of(w) for w in t.principal_wires) if t.principal_wires else 1
        if n == d_p and d_p != t.space.dim:
            src = HilbertSpec.of(
                [(w, t.space.dim_of(w)) for w in t.principal_wires + t.ancilla_wires]
            )
            anc = t.ancilla_init.vector
            if kind == "ket":
                joint = permute_ket(np.kron(arr, anc), src, t.space.wires)
                return DensityOperator.of(projector(joint), t.space)
            big = np.kron(arr, projector(anc))
            return DensityOperator.of(permute_wires(big, src, t.space.wires), t.space)
    if n != t.space.dim:
        raise ValueError(f"input dimension {n} matches neither the principal nor the full space")
    if kind == "ket":
        return DensityOperator.of(projector(arr), t.space)
    return DensityOperator.of(arr, t.space)


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
        print(f"wrote {out}", file=sys.stderr)
    else:
        print(text)


# ---------------------------------------------------------------- verbs


def _cmd_validate(args: argparse.Namespace) -> int:
    payload = _load_json(args.file)
    if not isinstance(payload, dict):
        raise ValueError("expected a circuit, tree, or measurement JSON object")
    if "gates" in payload:
        c = circuit_from_json(payload)
        violations = validate_circuit(c)
        out = {
            "kind": "circuit",
            "valid": not violations,
            "violations": [
                {"code": v.code, "where": v.where, "message": v.message} for v in violations
            ],
        }
        lines = ["circuit: OK"] if not violations else [str(v) for v in violations]
    elif "nodes" in payload:
        t = tree_from_json(payload)
        problems = validate_tree(t)
        out = {"kind": "tree", "valid": not problems, "problems": problems}
        lines = ["tree: OK"] if not problems else problems
    elif "outcomes" in payload:
        m = measurement_from_json(payload)
        defect = m.completeness_defect()
        problems = [] if defect <= TOL.complete else [f"completeness defect {defect:.3e}"]
        out = {"kind": "measurement", "valid": not problems, "problems": problems}
        lines = ["measurement: OK"] if not problems else problems
    else:
        raise ValueError("expected a circuit, tree, or measurement JSON object")
    if args.format == "table":
        print("\n".join(lines))
    else:
        _print_json(out)
    return EXIT_OK if out["valid"] else EXIT_INVALID


def _cmd_paths(args: argparse.Namespace) -> int:
    c = _load_valid_circuit(args.circuit)
    paths = enumerate_paths(c)
    if args.format == "table":
        for p in paths:
            print(",".join(f"{gid}={p[gid]}" for gid in flattened_gates(c)))
    else:
        _print_json([_path_json(c, p) for p in paths])
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    kind, arr = state_from_json(_load_json(args.input))
    rows: list[dict[str, Any]] = []
    if args.circuit:
        c = _load_valid_circuit(args.circuit)
        rho = _principal_density(c, kind, arr)
        paths = [parse_path_spec(c, args.path)] if args.path else enumerate_paths(c)
        for p in paths:
            prob, sigma = simulate_path(c, p, rho)
            reduced = partial_trace_matrix(sigma, c.space, c.output_principal)
            rows.append(
                {
                    "path": _path_json(c, p),
                    "probability": prob,
                    "output_trace": float(sigma.trace().real),
                    "principal_output": matrix_to_json(reduced),
                    "_reduced": reduced,
                    "_label": ",".join(f"{g}={p[g]}" for g in flattened_gates(c)),
                }
            )
    else:
        t = tree_from_json(_load_json(args.tree))
        problems = validate_tree(t)
        if problems:
            for line in problems:
                print(line, file=sys.stderr)
            return EXIT_INVALID
        sigma0 = _tree_input(t, kind, arr)
        results = run_tree(t, sigma0)
        for b in t.branches():
            prob, sigma = results[b]
            row: dict[str, Any] = {
                "branch": route_label(b),
                "probability": prob,
                "output_trace": float(sigma.trace().real),
                "_label": route_label(b) or "(root)",
            }
            if t.has_roles():
                reduced = partial_trace_matrix(sigma, t.space, t.output_principal)
                row["principal_output"] = matrix_to_json(reduced)
                row["_reduced"] = reduced
            rows.append(row)

    if args.format == "table":
        table_rows = [
            [r["_label"], f"{r['probability']:.9f}", f"{r['output_trace']:.9f}"] for r in rows
        ]
        print("\n".join(_table(table_rows, ["route", "probability", "output_trace"])))
        for r in rows:
            if "_reduced" in r:
                print(f"{r['_label']}: principal output")
                print("\n".join(_matrix_lines(r["_reduced"])))
    else:
        _print_json([{k: v for k, v in r.items() if not k.startswith("_")} for r in rows])
    return EXIT_OK


def _cmd_reduce(args: argparse.Namespace) -> int:
    c = _load_valid_circuit(args.circuit)
    lin, _ = linearize(c)
    _write_or_print(json.dumps(circuit_to_json(lin), indent=2), args.output)
    return EXIT_OK


def _cmd_tree(args: argparse.Namespace) -> int:
    if args.circuit:
        c = _load_valid_circuit(args.circuit)
        t, _ = reduce_circuit(c)
    else:
        t = tree_from_json(_load_json(args.tree))
        problems = validate_tree(t)
        if problems:
            for line in problems:
                print(line, file=sys.stderr)
            return EXIT_INVALID
    if args.dot:
        _write_or_print(tree_to_dot(t), args.output)
    else:
        _write_or_print(json.dumps(tree_to_json(t), indent=2), args.output)
    return EXIT_OK


def _cmd_check_independence(args: argparse.Namespace) -> int:
    c = _load_valid_circuit(args.circuit)
    t, bij = reduce_circuit(c)
    if args.path:
        paths = [parse_path_spec(c, args.path)]
    else:
        paths = enumerate_paths(c)
    reports = []
    for p in paths:
        rep = check_independence(t, bij.forward[p], probes=args.probes, seed=args.seed)
        reports.append((p, rep))
    payload = [
        {
            "path": _path_json(c, p),
            "branch": route_label(rep.branch),
            "probe_count": rep.probe_count,
            "min_probability": rep.min_probability,
            "max_probability": rep.max_probability,
            "max_deviation": rep.max_deviation,
            "verdict": rep.verdict,
        }
        for p, rep in reports
    ]
    if args.format == "table":
        rows = [
            [
                route_label(rep.branch),
                rep.verdict,
                f"{rep.min_probability:.9f}",
                f"{rep.max_probability:.9f}",
                f"{rep.max_deviation:.3e}",
            ]
            for _, rep in reports
        ]
        print("\n".join(_table(rows, ["branch", "verdict", "min p", "max p", "spread"])))
    else:
        _print_json(payload)
    ok = all(rep.verdict == "independent" for _, rep in reports)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _cmd_check_unitary(args: argparse.Namespace) -> int:
    c = _load_valid_circuit(args.circuit)
    u = matrix_from_json(_load_json(args.operator), "operator")
    t, _ = reduce_circuit(c)
    iso = check_isometry_scaling(t, u)
    # the supplied operator may carry an overall scale; once the scaling
    # check pins t_scale, the branches are tested against the rescaled
    # (isometric) operator
    target = iso.t_scale * u if iso.t_scale is not None else u
    branch_rows = []
    all_compute = True
    for b in t.branches():
        holds, residual = check_computes(t, b, target, probes=args.probes, seed=args.seed)
        all_compute = all_compute and holds
        branch_rows.append(
            {
                "branch": route_label(b),
                "computes": holds,
                "residual": residual if math.isfinite(residual) else None,
            }
        )
    payload = {
        "branches": branch_rows,
        "t_scale": iso.t_scale,
        "verdict": iso.verdict,
        "detail": iso.detail,
    }
    if args.format == "table":
        rows = [
            [r["branch"], "yes" if r["computes"] else "no",
             "-" if r["residual"] is None else f"{r['residual']:.3e}"]
            for r in branch_rows
        ]
        print("\n".join(_table(rows, ["branch", "computes", "residual"])))
        scale = "-" if iso.t_scale is None else f"{iso.t_scale:.9f}"
        line = f"t_scale={scale}  verdict={iso.verdict}"
        print(line if not iso.detail else f"{line}  ({iso.detail})")
    else:
        _print_json(payload)
    ok = all_compute and iso.verdict in ("unitary", "isometry")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _cmd_factor(args: argparse.Namespace) -> int:
    c = _load_valid_circuit(args.circuit)
    t, bij = reduce_circuit(c)
    p = parse_path_spec(c, args.path)
    branch = bij.forward[p]
    f = factor_branch(t, branch, seed=args.seed)
    if f is None:
        payload = {"path": _path_json(c, p), "branch": route_label(branch), "factored": False}
        if args.format == "table":
            print(f"{route_label(branch)}: does not factor")
        else:
            _print_json(payload)
        return EXIT_CHECK_FAILED
    payload = {
        "path": _path_json(c, p),
        "branch": route_label(branch),
        "factored": True,
        "kind": f.kind,
        "probability": f.probability,
        "residual": f.residual,
        "U": matrix_to_json(f.principal_operator),
        "b": vector_to_json(f.ancilla_vector),
    }
    if args.format == "table":
        print(f"branch:      {route_label(branch)}")
        print(f"kind:        {f.kind}")
        print(f"probability: {f.probability:.9f}")
        print(f"residual:    {f.residual:.3e}")
        print("U:")
        print("\n".join(_matrix_lines(f.principal_operator)))
        print("b:")
        print("\n".join(_matrix_lines(f.ancilla_vector.reshape(-1, 1))))
    else:
        _print_json(payload)
    return EXIT_OK


def _cmd_demo(args: argparse.Namespace) -> int:
    if not args.name:
        if args.format == "table":
            print("\n".join(sorted(DEMOS)))
        else:
            _print_json(sorted(DEMOS))
        return EXIT_OK
    if args.name not in DEMOS:
        raise ValueError(f"unknown demo {args.name!r} (have: {', '.join(sorted(DEMOS))})")
    payload = circuit_to_json(DEMOS[args.name]())
    text = json.dumps(payload, indent=2)
    if args.emit or args.output:
        _write_or_print(text, args.output or f"{args.name}.json")
    else:
        print(text)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument(
        "--format",
        choices=("json", "table"),
        default="json",
        help="report style on stdout (default json)",
    )

    p = argparse.ArgumentParser(
        prog="meastree",
        description="Circuits with general measurements, their measurement trees, "
        "and input-independence checks.",
    )
    sub = p.add_subparsers(dest="verb", required=True)

    sp = sub.add_parser("validate", parents=[fmt], help="validate a circuit/tree/measurement file")
    sp.add_argument("file")
    sp.set_defaults(handler=_cmd_validate)

    sp = sub.add_parser("paths", parents=[fmt], help="enumerate the coherent paths of a circuit")
    sp.add_argument("--circuit", required=True)
    sp.set_defaults(handler=_cmd_paths)

    sp = sub.add_parser("simulate", parents=[fmt], help="run a circuit or a tree on an input state")
    grp = sp.add_mutually_exclusive_group(required=True)
    grp.add_argument("--circuit")
    grp.add_argument("--tree")
    sp.add_argument("--input", required=True, help="state file: ket or density matrix JSON")
    sp.add_argument("--path", help='circuit mode: one path as "gate=outcome,..."')
    sp.set_defaults(handler=_cmd_simulate)

    sp = sub.add_parser(
        "reduce", parents=[fmt], help="merge each schedule layer into one gate (linearize)"
    )
    sp.add_argument("--circuit", required=True)
    sp.add_argument("-o", "--output", help="write the linear circuit JSON here instead of stdout")
    sp.set_defaults(handler=_cmd_reduce)

    sp = sub.add_parser(
        "tree", parents=[fmt], help="compile to a measurement tree (from a circuit or a tree file)"
    )
    grp = sp.add_mutually_exclusive_group(required=True)
    grp.add_argument("--circuit")
    grp.add_argument("--tree")
    sp.add_argument("--dot", action="store_true", help="emit Graphviz dot text instead of JSON")
    sp.add_argument("-o", "--output")
    sp.set_defaults(handler=_cmd_tree)

    sp = sub.add_parser(
        "check-independence",
        parents=[fmt],
        help="probe whether path probabilities depend on the input",
    )
    sp.add_argument("--circuit", required=True)
    grp = sp.add_mutually_exclusive_group()
    grp.add_argument("--path", help='one path as "gate=outcome,..."')
    grp.add_argument("--all-paths", action="store_true", help="check every path (default)")
    sp.add_argument("--probes", type=int, default=32)
    sp.add_argument("--seed", type=int, required=True)
    sp.set_defaults(handler=_cmd_check_independence)

    sp = sub.add_parser(
        "check-unitary",
        parents=[fmt],
        help="check that every branch computes the given operator, and its scaling",
    )
    sp.add_argument("--circuit", required=True)
    sp.add_argument("--operator", required=True, help="matrix JSON file")
    sp.add_argument("--probes", type=int, default=16)
    sp.add_argument("--seed", type=int, required=True)
    sp.set_defaults(handler=_cmd_check_unitary)

    sp = sub.add_parser(
        "factor", parents=[fmt], help="factor one branch into an isometry and an ancilla vector"
    )
    sp.add_argument("--circuit", required=True)
    sp.add_argument("--path", required=True, help='path as "gate=outcome,..."')
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(handler=_cmd_factor)

    sp = sub.add_parser("demo", parents=[fmt], help="print or emit a bundled demo circuit")
    sp.add_argument("name", nargs="?", help="demo name; omit to list them")
    sp.add_argument("--emit", action="store_true", help="write NAME.json instead of stdout")
    sp.add_argument("-o", "--output", help="write to this file")
    sp.set_defaults(handler=_cmd_demo)
    return p


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    raw_tol = os.environ.get("MEASTREE_TOL")
    if raw_tol:
        try:
            configure_tolerances(float(raw_tol))
        except ValueError as exc:
            print(f"error: MEASTREE_TOL: {exc}", file=sys.stderr)
            return EXIT_MALFORMED
    try:
        return args.handler(args)
    except InvalidCircuitError as exc:
        for v in exc.violations:
            print(str(v), file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
