"""Command-line front-end.

Exit codes: 0 success, 2 usage/validation/parse problem, 3 infeasible,
4 budget exhausted. Errors go to stderr as one JSON object; stdout stays
machine-readable.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench as bench_mod
from . import evaluation, exact, heuristics, model, scenario
from .bench import SweepSpec, fmt_num
from .graph import shortest_paths

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_BUDGET = 4

_AXIS_ALIASES = {"rho_o": "stay_probability"}


def _fail(code: int, message: str) -> int:
    print(json.dumps({"error": message}), file=sys.stderr)
    return code


def _load_params(args) -> scenario.ScenarioParams:
    data = {}
    if getattr(args, "params", None):
        with open(args.params, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ValueError(f"{item!r}: expected KEY=VALUE")
        key, raw = item.split("=", 1)
        if "," in raw:
            data[key] = [_coerce(part) for part in raw.split(",")]
        else:
            data[key] = _coerce(raw)
    return scenario.params_from_dict(data)


def _coerce(raw: str):
    raw = raw.strip()
    if raw.lower() in ("none", "null"):
        return None
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def _load_instance(path: str) -> model.ProblemInstance:
    with open(path, "r", encoding="utf-8") as fh:
        return model.instance_from_json(fh.read())


def _cmd_generate(args) -> int:
    try:
        params = _load_params(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        return _fail(EXIT_USAGE, f"invalid params: {exc}")
    try:
        instance = scenario.generate_instance(params, args.seed)
    except scenario.GenerationError as exc:
        return _fail(EXIT_USAGE, str(exc))
    Path(args.out).write_text(model.instance_to_json(instance), encoding="utf-8")
    print(args.out)
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        instance = _load_instance(args.instance)
    except (model.ParseError, OSError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    violations = model.validate_instance(instance)
    print(json.dumps([{"code": v.code, "detail": v.detail} for v in violations]))
    return EXIT_OK if not violations else EXIT_USAGE


def _cmd_solve(args) -> int:
    try:
        instance = _load_instance(args.instance)
    except (model.ParseError, OSError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    violations = model.validate_instance(instance)
    if violations:
        return _fail(EXIT_USAGE, f"invalid instance: {violations[0]}")
    paths = shortest_paths(instance.network, instance.relevant_nodes)

    status = "ok"
    unplaced: list = []
    if args.algo == "exact":
        budget = exact.SolveBudget(
            max_nodes_expanded=args.budget_nodes,
            wall_time_s=args.budget_seconds,
        )
        res = exact.solve_exact(instance, paths, budget)
        status = res.status
        if res.status == "infeasible":
            return _fail(EXIT_INFEASIBLE, "no feasible placement")
        if res.placement is None:
            return _fail(EXIT_BUDGET, "budget exhausted before any feasible placement")
        placement, cost = res.placement, res.cost
    elif args.algo in ("ppcc", "spba"):
        fn = heuristics.ppcc if args.algo == "ppcc" else heuristics.spba
        r = fn(instance, paths)
        placement, cost, unplaced = r.placement, r.cost, list(r.unplaced)
    elif args.algo == "agw":
        r = heuristics.agw(instance, paths)
        placement, cost = r.placement, r.cost
    else:
        return _fail(EXIT_USAGE, f"unknown algorithm {args.algo!r}")

    payload = {
        "algorithm": args.algo,
        "status": status,
        "total": cost.total,
        "cost": cost.to_dict(),
        "unplaced": [{"request": r, "position": l, "nf": nf}
                     for (r, l, nf) in unplaced],
        "placement": model.placement_to_dict(placement),
    }
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n",
                                  encoding="utf-8")
    print(fmt_num(cost.total))
    return EXIT_BUDGET if status == "budget_exceeded" else EXIT_OK


def _cmd_export_lp(args) -> int:
    try:
        instance = _load_instance(args.instance)
    except (model.ParseError, OSError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    try:
        text = exact.export_lp(instance)
    except exact.ExportSizeError as exc:
        return _fail(EXIT_USAGE, str(exc))
    Path(args.out).write_text(text, encoding="utf-8")
    print(args.out)
    return EXIT_OK


def _parse_sweep(spec: str) -> SweepSpec:
    if "=" not in spec:
        raise ValueError("sweep must look like AXIS=v1,v2,... or AXIS=start:step:stop")
    axis, raw = spec.split("=", 1)
    axis = _AXIS_ALIASES.get(axis.strip(), axis.strip())
    raw = raw.strip()
    if ":" in raw:
        parts = raw.split(":")
        if len(parts) != 3:
            raise ValueError("range sweep must be start:step:stop")
        start, step, stop = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("sweep step must be > 0")
        values = []
        i = 0
        while True:
            v = round(start + i * step, 10)
            if v > stop + 1e-9:
                break
            values.append(v)
            i += 1
    else:
        values = [float(p) for p in raw.split(",")]
    if axis in ("num_candidates", "batch_size"):
        values = [int(v) for v in values]
    return SweepSpec(axis=axis, values=tuple(values))


def _cmd_bench(args) -> int:
    try:
        params = _load_params(args)
        spec = _parse_sweep(args.sweep)
        algorithms = tuple(a.strip() for a in args.algos.split(","))
        table = bench_mod.run_sweep(
            spec, params, args.trials, algorithms,
            base_seed=args.seed, jobs=args.jobs,
            measure_runtime=args.measure_runtime)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    if args.format in ("csv", "both"):
        path = outdir / "results.csv"
        bench_mod.emit_results(table, "csv", str(path))
        written.append(str(path))
    if args.format in ("json", "both"):
        path = outdir / "results.json"
        bench_mod.emit_results(table, "json", str(path))
        written.append(str(path))
    for path in written:
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pccplace",
        description="Joint proactive-caching / VNF-chain placement toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a random instance")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--params", help="JSON file of generator parameters")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override one parameter (repeatable; ranges as lo,hi)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("validate", help="check an instance file")
    p.add_argument("--instance", required=True)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("solve", help="place one instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--algo", required=True,
                   choices=["exact", "ppcc", "spba", "agw"])
    p.add_argument("--out", help="write placement + cost report JSON here")
    p.add_argument("--budget-nodes", type=int, default=10_000_000)
    p.add_argument("--budget-seconds", type=float, default=60.0)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("export-lp", help="write the linearized 0-1 program")
    p.add_argument("--instance", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_lp)

    p = sub.add_parser("bench", help="run a Monte-Carlo sweep")
    p.add_argument("--sweep", required=True,
                   metavar="AXIS=v1,v2|AXIS=start:step:stop",
                   help="axis is num_candidates, batch_size, or "
                        "stay_probability (alias rho_o)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--algos", default="ppcc,spba,agw")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--params", help="JSON file of generator parameters")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=["csv", "json", "both"], default="csv")
    p.add_argument("--measure-runtime", action="store_true",
                   help="record wall times (makes output nondeterministic)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
