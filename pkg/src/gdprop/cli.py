"""Command-line front end.

Every command prints JSON on stdout. Failures print ``{"error", "detail"}`` on
stderr and exit 1 for usage, I/O or syntax problems and 2 when the input is
well-formed but rejected (hard query, infeasible target, oracle bound, ...).
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from . import __version__
from .approx import EmptyOutputError, InfeasibleCoverError, approx_gdp, build_psc_instance, ratio_bound
from .classifier import build_recursion_tree
from .exact import HardQueryError, InfeasibleTargetError, compute_opt
from .reductions import (
    GeneratorPreconditionError,
    OracleBoundError,
    PVCBInstance,
    brute_force_gdp,
    gen_disjoint_pair,
    gen_overlap,
    gen_two_path,
    graph_to_text,
    parse_graph,
    random_bipartite_graph,
)
from .relational import InstanceError, QueryError, QuerySyntaxError, instance_to_csv, load_instance, parse_query

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_REJECTED = 2

OUTPUT_SCHEMAS: dict[str, Any] = {
    "classify": {"ptime": "bool", "dead_ends": "[query text]", "tree": "node (with --explain)"},
    "tree node": {"query": "text", "step": "{kind, ...} | null", "children": "[node | {verdict: bool}]"},
    "solve": {"cost": "int", "removed_count": "int", "clamped": "bool", "deleted": "[{relation, tuple}]"},
    "approx": {"cost": "int", "removed_count": "int", "clamped": "bool", "deleted": "[{relation, tuple}]", "ratio_bound": "int"},
    "oracle": {"cost": "int", "removed_count": "int", "clamped": "bool", "deleted": "[{relation, tuple}]"},
    "gen": {"query": "path", "data": "directory", "graph": "path", "k": "int", "relations": "{name: path}"},
    "error": {"error": "kind", "detail": "message"},
}


class CliError(Exception):
    def __init__(self, kind: str, detail: str, code: int) -> None:
        super().__init__(detail)
        self.kind = kind
        self.detail = detail
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise CliError("usage", message, EXIT_USAGE)


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("-q", "--query", required=True, help="query file")
    p.add_argument("-d", "--data", required=True, help="directory of <relation>.csv files or a JSON file")
    p.add_argument("-k", type=int, required=True, help="number of outputs to remove")
    p.add_argument("--reserve-constant", action="store_true", help="reject the literal '*' in input data")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gdprop", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="store_true", help="print the version and JSON output schemas")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("classify", help="decide tractability of a query")
    p.add_argument("-q", "--query", required=True)
    p.add_argument("--explain", action="store_true", help="include the full recursion tree")

    p = sub.add_parser("solve", help="exact optimum for a tractable query")
    _add_instance_args(p)
    p.add_argument("--strict", action="store_true", help="fail instead of clamping when k exceeds |Q(D)|")

    p = sub.add_parser("approx", help="p-approximation through partial set cover")
    _add_instance_args(p)
    p.add_argument("--dump-psc", metavar="PATH", help="write the set cover instance as JSON")

    p = sub.add_parser("oracle", help="exhaustive optimum for small instances")
    _add_instance_args(p)
    p.add_argument("--oracle-bound", type=int, default=16, help="maximum number of input tuples (default 16)")

    p = sub.add_parser("gen", help="emit a hard instance from a bipartite graph")
    p.add_argument("--kind", choices=["two-path", "disjoint", "overlap"], required=True)
    p.add_argument("-q", "--query", help="dead-end query file (disjoint/overlap)")
    p.add_argument("-g", "--graph", help="graph file: 'U: ...', 'V: ...', then 'u v' per line")
    p.add_argument("--seed", type=int, help="random graph seed when no graph file is given")
    p.add_argument("--vertices", type=int, default=8, help="vertex budget for random graphs")
    p.add_argument("-k", type=int, help="edges to cover (default: all)")
    p.add_argument("-o", "--outdir", required=True)
    return parser


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError("io", f"{path}: {exc.strerror or exc}", EXIT_USAGE) from exc


def _load(args: argparse.Namespace):
    q = parse_query(_read(args.query))
    if args.k < 1:
        raise CliError("usage", "k must be at least 1", EXIT_USAGE)
    try:
        db = load_instance(q, args.data, reserve_constant=args.reserve_constant)
    except OSError as exc:
        raise CliError("io", f"{args.data}: {exc}", EXIT_USAGE) from exc
    return q, db


def cmd_classify(args: argparse.Namespace) -> dict[str, Any]:
    tree = build_recursion_tree(parse_query(_read(args.query)))
    out: dict[str, Any] = {"ptime": tree.is_ptime, "dead_ends": [d.to_text() for d in tree.dead_ends()]}
    if args.explain:
        out["tree"] = tree.to_dict()
    return out


def cmd_solve(args: argparse.Namespace) -> dict[str, Any]:
    q, db = _load(args)
    return compute_opt(q, args.k, db, strict=args.strict).to_dict()


def cmd_approx(args: argparse.Namespace) -> dict[str, Any]:
    q, db = _load(args)
    if args.dump_psc:
        try:
            Path(args.dump_psc).write_text(build_psc_instance(q, args.k, db).to_json() + "\n", encoding="utf-8")
        except OSError as exc:
            raise CliError("io", f"{args.dump_psc}: {exc}", EXIT_USAGE) from exc
    out = approx_gdp(q, args.k, db).to_dict()
    out["ratio_bound"] = ratio_bound(q)
    return out


def cmd_oracle(args: argparse.Namespace) -> dict[str, Any]:
    q, db = _load(args)
    return brute_force_gdp(q, args.k, db, bound=args.oracle_bound).to_dict()


def cmd_gen(args: argparse.Namespace) -> dict[str, Any]:
    if args.graph:
        graph = parse_graph(_read(args.graph))
    elif args.seed is not None:
        graph = random_bipartite_graph(random.Random(args.seed), args.vertices)
    else:
        raise CliError("usage", "gen needs --graph or --seed", EXIT_USAGE)
    if not graph.E:
        raise CliError("rejected", "the graph has no edges", EXIT_REJECTED)
    inst = PVCBInstance(graph, args.k if args.k is not None else len(graph.E))
    if args.kind == "two-path":
        q, k, db = gen_two_path(inst)
    else:
        if not args.query:
            raise CliError("usage", f"--kind {args.kind} needs a dead-end query (-q)", EXIT_USAGE)
        q = parse_query(_read(args.query))
        k, db = (gen_disjoint_pair if args.kind == "disjoint" else gen_overlap)(q, inst)
    out = Path(args.outdir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "query.txt").write_text(q.to_text() + "\n", encoding="utf-8")
        (out / "graph.txt").write_text(graph_to_text(graph), encoding="utf-8")
        (out / "k.txt").write_text(f"{k}\n", encoding="utf-8")
        data = out / "data"
        data.mkdir(exist_ok=True)
        rels = {}
        for name, text in instance_to_csv(q, db).items():
            (data / f"{name}.csv").write_text(text, encoding="utf-8")
            rels[name] = str(data / f"{name}.csv")
    except OSError as exc:
        raise CliError("io", str(exc), EXIT_USAGE) from exc
    return {"query": str(out / "query.txt"), "data": str(data), "graph": str(out / "graph.txt"), "k": k, "relations": rels}


COMMANDS = {"classify": cmd_classify, "solve": cmd_solve, "approx": cmd_approx, "oracle": cmd_oracle, "gen": cmd_gen}


def _fail(kind: str, detail: str, code: int) -> int:
    print(json.dumps({"error": kind, "detail": detail}, sort_keys=True), file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.version:
            print(json.dumps({"version": __version__, "schemas": OUTPUT_SCHEMAS}, sort_keys=True, indent=2))
            return EXIT_OK
        if args.command is None:
            raise CliError("usage", "a command is required: " + ", ".join(COMMANDS), EXIT_USAGE)
        result = COMMANDS[args.command](args)
    except CliError as exc:
        return _fail(exc.kind, exc.detail, exc.code)
    except QuerySyntaxError as exc:
        return _fail("syntax", str(exc), EXIT_USAGE)
    except InstanceError as exc:
        return _fail("instance", str(exc), EXIT_USAGE)
    except HardQueryError as exc:
        return _fail("hard_query", str(exc), EXIT_REJECTED)
    except (InfeasibleTargetError, InfeasibleCoverError) as exc:
        return _fail("infeasible", str(exc), EXIT_REJECTED)
    except EmptyOutputError as exc:
        return _fail("empty_output", str(exc), EXIT_REJECTED)
    except OracleBoundError as exc:
        return _fail("oracle_bound", str(exc), EXIT_REJECTED)
    except GeneratorPreconditionError as exc:
        return _fail("precondition", str(exc), EXIT_REJECTED)
    except QueryError as exc:
        return _fail("query", str(exc), EXIT_REJECTED)
    except ValueError as exc:
        return _fail("invalid", str(exc), EXIT_USAGE)
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
