"""Command-line front end: ``fair-orient <subcommand> ...``.

Every solve subcommand verifies its own output before printing a JSON run
report.  Exit codes: 0 success, 1 no solution (or the checked property fails),
2 input error, 3 internal failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

from . import ef1, efx_exact, efxr, fpt, generators
from .instance import (Allocation, GraphInstance, Instance, InstanceError, PlanarInstance,
                       as_instance, instance_from_dict, parse_instance, serialize_instance)
from .verify import CHECKS, check_orientation

logger = logging.getLogger("fairorient")

EXIT_OK, EXIT_NONE, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(Exception):
    pass


class SelfCheckError(Exception):
    pass


def _configure_logging() -> None:
    level = os.environ.get("FAIR_ORIENT_LOG", "warning").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _load(path: str):
    doc = _read_json(path)
    if isinstance(doc, dict) and "instance" in doc:
        doc = doc["instance"]
    return instance_from_dict(doc)


def digest(x) -> str:
    canon = json.dumps(json.loads(serialize_instance(x)), sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canon.encode()).hexdigest()


def verification(inst: Instance, alloc: Allocation) -> dict:
    out = {"orientation": check_orientation(inst, alloc)[0]}
    for name, fn in CHECKS.items():
        out[name] = fn(inst, alloc).holds
    return out


def _report(command: str, x, solver: str, started: float, **rest) -> dict:
    rep = {"command": command, "instance_digest": digest(x), "solver": solver}
    rep.update(rest)
    rep["timing"] = {"seconds": round(time.perf_counter() - started, 6)}
    return rep


def _allocation_outcome(inst: Instance, alloc: Allocation, required: Sequence[str]) -> dict:
    ver = verification(inst, alloc)
    failed = [p for p in ("orientation", *required) if not ver[p]]
    if failed:
        raise SelfCheckError(f"self-verification failed for {failed}",
                             {"status": "found", "allocation": alloc.to_json(inst),
                              "verification": ver})
    return {"status": "found", "allocation": alloc.to_json(inst), "verification": ver}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_check(args) -> tuple[int, dict]:
    started = time.perf_counter()
    doc = _read_json(args.file)
    if not isinstance(doc, dict) or "allocation" not in doc:
        raise InputError("check needs a document with 'instance' and 'allocation'")
    x = instance_from_dict(doc.get("instance", {k: v for k, v in doc.items() if k != "allocation"}))
    inst = as_instance(x)
    alloc = Allocation.from_bundles(inst, doc["allocation"])
    rep = CHECKS[args.property](inst, alloc)
    orient, offenders = check_orientation(inst, alloc)
    out = _report("check", x, "verify", started, result=rep.to_json(),
                  orientation={"holds": orient, "offenders": [list(o) for o in offenders]})
    return (EXIT_OK if rep.holds else EXIT_NONE), out


def cmd_solve_ef1(args) -> tuple[int, dict]:
    started = time.perf_counter()
    x = _load(args.file)
    inst = as_instance(x)
    if args.policy == "identical":
        res = ef1.solve_ef1_identical(inst)
    else:
        res = ef1.solve_ef1(inst, ef1.Policy(item_order=args.policy), debug=args.debug)
    outcome = _allocation_outcome(inst, res.allocation, ["ef1"])
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(res.trace_json())
    stats = {"cycle_shifts": res.cycle_shifts, "pool_returns": res.pool_returns,
             "events": len(res.trace)}
    out = _report("solve-ef1", x, f"ef1/{args.policy}", started, outcome=outcome, stats=stats,
                  trace=args.trace)
    return EXIT_OK, out


def _need_graph(x, method: str) -> GraphInstance:
    if not isinstance(x, GraphInstance):
        raise InputError(f"method {method!r} needs a graph or multigraph instance")
    return x


def cmd_solve_efx(args) -> tuple[int, dict]:
    started = time.perf_counter()
    x = _load(args.file)
    inst = as_instance(x)
    extra: dict = {}
    if args.method == "brute":
        if isinstance(x, GraphInstance):
            bits = efx_exact.brute_force_efx_orientation(x, cap=args.cap)
            alloc = None if bits is None else efx_exact.orientation_allocation(x, bits)
        else:
            if args.layout:
                raise InputError("--layout only applies to --method fpt")
            alloc = efx_exact.brute_force_efx_orientation_allocation(inst)
    else:
        g = _need_graph(x, "fpt")
        if not g.is_simple:
            raise InputError("method 'fpt' needs a simple graph")
        if not g.vertices:
            layout = None
        elif args.layout:
            layout = fpt.layout_from_json(g, _read_json(args.layout))
        else:
            layout = fpt.search_layout(g, args.budget)
        if layout is None:
            alloc = Allocation.from_bundles(inst, {})
        else:
            _, alloc = fpt.decide_efx(layout)
            extra["layout"] = {"k": layout.k, **layout.to_json()}
    if alloc is None:
        out = _report("solve-efx", x, f"efx/{args.method}", started,
                      outcome={"status": "NONE"}, **extra)
        return EXIT_NONE, out
    outcome = _allocation_outcome(inst, alloc, ["efx"])
    return EXIT_OK, _report("solve-efx", x, f"efx/{args.method}", started, outcome=outcome, **extra)


def cmd_solve_efxr(args) -> tuple[int, dict]:
    started = time.perf_counter()
    x = _load(args.file)
    inst = as_instance(x)
    extra: dict = {}
    if args.method == "multigraph":
        alloc = efxr.multigraph_efxr(_need_graph(x, "multigraph"))
    elif args.method == "decomposable":
        groups = efxr.decompose_groups(inst)
        if isinstance(groups, efxr.NotDecomposable):
            raise InputError(f"instance is not decomposable: items {list(groups.witness)}")
        subs = [efxr.group_instance(inst, grp) for grp in groups]
        solve = efxr.GROUP_SOLVERS["efx"]
        try:
            with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
                results = list(pool.map(lambda s: solve(s, 2 ** 20), subs))
        except efxr.NoGroupSolution as exc:
            return EXIT_NONE, _report("solve-efxr", x, "efxr/decomposable", started,
                                      outcome={"status": "NONE", "reason": str(exc)})
        alloc = efxr.combine_group_allocations(inst, dict(zip(groups, results)))
        extra["groups"] = len(groups)
    else:
        if not isinstance(x, PlanarInstance):
            raise InputError("method 'planar-faces' needs a planar-faces instance")
        stats = efxr.PlanarStats()
        alloc = efxr.planar_faces_orientation(x, stats)
        proper, problems = efxr.allocation_is_proper(x, alloc)
        if not proper:
            raise SelfCheckError(f"allocation is not proper: {problems}", None)
        extra["planar"] = {"proper": proper, "steps": stats.steps, "ears": stats.ears,
                           "contractions": stats.contractions, "fallbacks": stats.fallbacks}
    outcome = _allocation_outcome(inst, alloc, ["efxr"])
    return EXIT_OK, _report("solve-efxr", x, f"efxr/{args.method}", started, outcome=outcome,
                            **extra)


def _parse_param(text: str):
    if "=" not in text:
        raise InputError(f"--param expects key=value, got {text!r}")
    k, v = text.split("=", 1)
    for conv in (int, float):
        try:
            return k, conv(v)
        except ValueError:
            pass
    if v.lower() in ("true", "false"):
        return k, v.lower() == "true"
    return k, v


def cmd_gen(args) -> tuple[int, dict | str]:
    if args.kind == "gadget-x":
        x = generators.gadget_x(args.B)
    elif args.kind in ("partition-vc", "partition-multigraph"):
        if not args.S:
            raise InputError("--S is required for partition reductions")
        try:
            S = [int(t) for t in args.S.split(",")]
        except ValueError as exc:
            raise InputError(f"--S must be comma-separated integers: {exc}") from exc
        fn = generators.partition_to_vc_graph if args.kind == "partition-vc" \
            else generators.partition_to_multigraph
        x = fn(S)
    else:
        params = dict(_parse_param(p) for p in args.param)
        x = generators.random_instance(args.random_kind, params, args.seed)
    return EXIT_OK, serialize_instance(x, indent=args.indent)


def cmd_layout(args) -> tuple[int, dict]:
    started = time.perf_counter()
    x = _load(args.file)
    g = _need_graph(x, "layout")
    if not g.vertices:
        raise InputError("graph has no vertices")
    lay = fpt.search_layout(g, args.budget)
    per_vertex = {v: {"boundary": sorted(lay.boundary[v]), "eloc": len(lay.eloc[v]),
                      "open_children": lay.open[v], "closed_children": lay.closed[v]}
                  for v in g.vertices}
    return EXIT_OK, _report("layout", x, "search_layout", started, k=lay.k, layout=lay.to_json(),
                            vertices=per_vertex)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    def common(parser, default):
        d = (lambda v: v) if default else (lambda v: argparse.SUPPRESS)
        parser.add_argument("--seed", type=int, default=d(0),
                            help="seed for random generation (default 0)")
        parser.add_argument("--threads", type=int, default=d(1),
                            help="worker threads (outputs unaffected)")
        parser.add_argument("--indent", type=int, default=d(2), help="JSON indentation")

    p = argparse.ArgumentParser(prog="fair-orient", description=__doc__.splitlines()[0])
    common(p, True)
    shared = argparse.ArgumentParser(add_help=False)
    common(shared, False)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name: str, help: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help, parents=[shared])

    c = add("check", "verify a fairness property of a given allocation")
    c.add_argument("file")
    c.add_argument("--property", choices=sorted(CHECKS), required=True)
    c.set_defaults(func=cmd_check)

    c = add("solve-ef1", "EF1 orientation by envy-cycle elimination")
    c.add_argument("file")
    c.add_argument("--policy", choices=["declaration", "laminar", "identical"],
                   default="declaration", help="item order / fast path")
    c.add_argument("--trace", help="write the event trace (JSON) to this file")
    c.add_argument("--debug", action="store_true", help="check solver invariants at every step")
    c.set_defaults(func=cmd_solve_ef1)

    c = add("solve-efx", "EFX orientation by exhaustive search or the record DP")
    c.add_argument("file")
    c.add_argument("--method", choices=["brute", "fpt"], required=True)
    c.add_argument("--layout", help="layout JSON for --method fpt")
    c.add_argument("--cap", type=int, default=efx_exact.DEFAULT_EDGE_CAP,
                   help="edge cap for --method brute")
    c.add_argument("--budget", type=int, default=20000, help="layout search budget")
    c.set_defaults(func=cmd_solve_efx)

    c = add("solve-efxr", "EFXr orientation for structured instances")
    c.add_argument("file")
    c.add_argument("--method", choices=["multigraph", "decomposable", "planar-faces"],
                   required=True)
    c.set_defaults(func=cmd_solve_efxr)

    c = add("gen", "emit an instance JSON")
    c.add_argument("--kind", choices=["gadget-x", "partition-vc", "partition-multigraph", "random"],
                   required=True)
    c.add_argument("--B", default="3", help="gadget weight for gadget-x")
    c.add_argument("--S", help="comma-separated PARTITION multiset")
    c.add_argument("--random-kind", default="graph", choices=sorted(generators.RANDOM_KINDS))
    c.add_argument("--param", action="append", default=[], help="generator parameter key=value")
    c.set_defaults(func=cmd_gen)

    c = add("layout", "search a low-width tree layout for a graph")
    c.add_argument("file")
    c.add_argument("--budget", type=int, default=20000)
    c.set_defaults(func=cmd_layout)
    return p


def run(argv: Sequence[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:       # argparse already printed usage
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    _configure_logging()
    try:
        code, out = args.func(args)
    except SelfCheckError as exc:
        msg, outcome = exc.args
        print(json.dumps({"command": args.command, "error": msg, "outcome": outcome},
                         indent=args.indent), file=stdout)
        return EXIT_INTERNAL
    except (InputError, InstanceError, fpt.LayoutError, efxr.PlanarInputError,
            efx_exact.CapExceeded, ValueError) as exc:
        print(f"fair-orient: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:        # invariant failures and anything unexpected
        logger.debug("internal failure", exc_info=True)
        print(f"fair-orient: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    print(out if isinstance(out, str) else json.dumps(out, indent=args.indent), file=stdout)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
