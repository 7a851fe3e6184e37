"""Command-line front end: ``qemcq generate | verify | cluster | compare``."""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from .campaign import (
    best_run,
    campaign_report,
    clustering_campaign,
    covering_array_campaign,
    resample_traces,
)
from .clustering import ModuleDependencyGraph, mq
from .covering_array import CoveringArray, ParameterModel, read_csv, verify, write_csv
from .hh_core import RunConfig, Selector

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_GROUP = re.compile(r"^(\d+)\^(\d+)$")
_STRENGTH = re.compile(r"^t=(\d+)$")


class ModelSpecError(ValueError):
    pass


def parse_model(spec: str, strength: int | None = None) -> ParameterModel:
    """Parse ``t=<int> <v>^<k> [<v>^<k> ...]`` into a :class:`ParameterModel`.

    ``strength`` overrides the ``t=`` token.
    """
    tokens = spec.split()
    if not tokens:
        raise ModelSpecError("empty model spec")
    m = _STRENGTH.match(tokens[0])
    if not m:
        raise ModelSpecError(f"expected 't=<int>' as first token, got {tokens[0]!r}")
    t = int(m.group(1))
    levels: list[int] = []
    for tok in tokens[1:]:
        g = _GROUP.match(tok)
        if not g:
            raise ModelSpecError(f"bad parameter group {tok!r}, expected '<values>^<count>'")
        v, k = int(g.group(1)), int(g.group(2))
        if k < 1:
            raise ModelSpecError(f"bad parameter group {tok!r}: count must be positive")
        levels.extend([v] * k)
    if not levels:
        raise ModelSpecError("no parameter groups given")
    if strength is not None:
        t = strength
    if t > len(levels):
        raise ModelSpecError(f"strength t={t} exceeds the number of parameters k={len(levels)}")
    try:
        return ParameterModel(t, tuple(levels))
    except ValueError as exc:
        raise ModelSpecError(str(exc)) from None


def _config(args) -> RunConfig:
    return RunConfig(
        population_size=args.population,
        max_iterations=args.max_iter,
        max_fitness_evals=args.max_evals,
        rng_seed=args.seed,
        selector=Selector(args.selector),
        discount=args.gamma,
    )


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _emit(args, files: dict[str, str], stdout_key: str) -> None:
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            (out / name).write_text(text)
        print(f"wrote {', '.join(str(out / n) for n in files)}", file=sys.stderr)
    else:
        sys.stdout.write(files[stdout_key])


def _load_graph(path: str) -> ModuleDependencyGraph:
    return ModuleDependencyGraph.parse(Path(path).read_text(encoding="utf-8"))


def clustering_json(labels, mdg: ModuleDependencyGraph) -> dict:
    score = mq(labels, mdg)
    clusters: dict[int, list[str]] = {}
    for name, c in zip(mdg.names, labels):
        clusters.setdefault(int(c), []).append(name)
    return {"modules": list(mdg.names), "labels": [int(c) for c in labels],
            "clusters": [clusters[c] for c in sorted(clusters)],
            "mf": list(score.per_cluster_mf), "mq": score.value}


def cmd_generate(args) -> int:
    model = parse_model(args.model, args.strength)
    config = _config(args)
    camp = covering_array_campaign(model, config, args.runs, args.seed, args.jobs, not args.no_tie_break)
    records = camp.execute()
    report = campaign_report("generate", model, camp, records, "min", tie_break=not args.no_tie_break)
    best = best_run(records, "min")
    report["best_size"] = best.objective
    csv_text = write_csv(CoveringArray(model, best.payload))
    _emit(args, {"array.csv": csv_text, "report.json": _dump(report)}, "report.json")
    return EXIT_OK if report["all_verified"] else EXIT_FAIL


def cmd_verify(args) -> int:
    try:
        model = parse_model(args.model, args.strength)
        array = read_csv(Path(args.array).read_text(encoding="utf-8"), model)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    ok, missing = verify(array)
    if ok:
        print(f"complete: {array.size} rows cover every {model.strength}-way interaction")
        return EXIT_OK
    print(f"incomplete: {len(missing)} uncovered interactions")
    for tup in missing:
        print(" ".join(f"p{c + 1}={v}" for c, v in zip(tup.columns, tup.values)))
    return EXIT_FAIL


def cmd_cluster(args) -> int:
    mdg = _load_graph(args.graph)
    config = _config(args)
    camp = clustering_campaign(mdg, config, args.runs, args.seed, args.jobs)
    records = camp.execute()
    report = campaign_report("cluster", mdg, camp, records, "max")
    best = best_run(records, "max")
    result = clustering_json(best.payload, mdg)
    result["selector"] = config.selector.value
    report["best_mq"] = best.objective
    report["best_clustering"] = result
    _emit(args, {"clustering.json": _dump(result), "report.json": _dump(report)}, "report.json")
    return EXIT_OK


def cmd_compare(args) -> int:
    if bool(args.model) == bool(args.graph):
        print("error: give exactly one of --model or --graph", file=sys.stderr)
        return EXIT_USAGE
    if args.model:
        problem = parse_model(args.model, args.strength)
        sense = "min"
    else:
        problem = _load_graph(args.graph)
        sense = "max"
    sides, records_by = {}, {}
    for sel in (Selector.QEMCQ, Selector.EMCQ):
        args.selector = sel.value
        config = _config(args)
        if sense == "min":
            camp = covering_array_campaign(problem, config, args.runs, args.seed, args.jobs,
                                           not args.no_tie_break)
        else:
            camp = clustering_campaign(problem, config, args.runs, args.seed, args.jobs)
        records = camp.execute()
        records_by[sel.value] = records
        rep = campaign_report("compare", problem, camp, records, sense)
        rep["wall_time_s"] = {"total": sum(r.wall_time_s for r in records),
                              "mean": sum(r.wall_time_s for r in records) / len(records)}
        sides[sel.value] = rep
    length = max(len(r.trace) for recs in records_by.values() for r in recs)
    trace = {}
    for sel, recs in records_by.items():
        grid, mean = resample_traces([r.trace for r in recs], length)
        trace["evals"] = grid
        trace[sel] = mean
    q, e = sides["qemcq"]["summary"], sides["emcq"]["summary"]
    report = {
        "schema_version": sides["qemcq"]["schema_version"],
        "tool": "qemcq",
        "version": sides["qemcq"]["version"],
        "command": "compare",
        "problem": sides["qemcq"]["problem"],
        "objective": sides["qemcq"]["objective"],
        "sense": sense,
        "seeds": sides["qemcq"]["seeds"],
        "side_by_side": {"best": {"qemcq": q["best"], "emcq": e["best"]},
                         "mean": {"qemcq": q["mean"], "emcq": e["mean"]},
                         "wall_time_s": {s: sides[s]["wall_time_s"]["total"] for s in sides}},
        "selectors": sides,
        "trace": trace,
    }
    _emit(args, {"compare.json": _dump(report)}, "compare.json")
    if sense == "min":
        return EXIT_OK if all(s["all_verified"] for s in sides.values()) else EXIT_FAIL
    return EXIT_OK


def _add_search_flags(p: argparse.ArgumentParser, selector=True) -> None:
    p.add_argument("--runs", type=int, default=20, help="independent runs (seeds seed..seed+runs-1)")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    if selector:
        p.add_argument("--selector", choices=[s.value for s in Selector], default="qemcq")
    p.add_argument("--population", type=int, default=20)
    p.add_argument("--max-iter", type=int, default=2500)
    p.add_argument("--max-evals", type=int, default=1500, help="fitness evaluations per search")
    p.add_argument("--gamma", type=float, default=0.8, help="Q-learning discount")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", help="output directory (default: print the report to stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qemcq", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build covering arrays over a seeded campaign")
    p.add_argument("--model", required=True, help="e.g. 't=3 3^1 2^3'")
    p.add_argument("--strength", type=int, help="override t")
    p.add_argument("--no-tie-break", action="store_true",
                   help="score rows by new-tuple count only")
    _add_search_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("verify", help="check that a CSV array covers a model")
    p.add_argument("--array", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--strength", type=int)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cluster", help="maximize MQ of a module dependency graph")
    p.add_argument("--graph", required=True)
    _add_search_flags(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("compare", help="paired Q-EMCQ vs EMCQ campaigns")
    p.add_argument("--model")
    p.add_argument("--graph")
    p.add_argument("--strength", type=int)
    p.add_argument("--no-tie-break", action="store_true")
    _add_search_flags(p, selector=False)
    p.set_defaults(func=cmd_compare, selector="qemcq")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
