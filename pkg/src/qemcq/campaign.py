"""Multi-seed campaigns and their JSON reports.

Run ``r`` of a campaign uses seed ``base_seed + r``. Runs are independent
and may be spread over worker processes; the report is assembled after all
of them finish, in run order.
"""

from __future__ import annotations

import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Optional

import numpy as np

from . import __version__
from .clustering import ModuleDependencyGraph, maximize_mq
from .covering_array import InteractionSet, ParameterModel, generate, lower_bound, verify
from .hh_core import RunConfig

SCHEMA_VERSION = 1
TRACE_POINTS = 500


@dataclass
class RunRecord:
    run: int
    seed: int
    objective: float
    evals_used: int
    wall_time_s: float
    verified: Optional[bool] = None
    payload: Any = field(default=None, repr=False)
    trace: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        out = {"run": self.run, "seed": self.seed, "objective": self.objective,
               "evals_used": self.evals_used, "wall_time_s": round(self.wall_time_s, 4)}
        if self.verified is not None:
            out["verified"] = self.verified
        return out


def summarize(values, sense: str) -> dict:
    """best/worst/mean/std (sample std, 0 for a single run) of the objective values."""
    values = list(values)
    best = min(values) if sense == "min" else max(values)
    worst = max(values) if sense == "min" else min(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    return {"best": best, "worst": worst, "mean": statistics.fmean(values), "std": std}


def _ca_run(config: RunConfig, model: ParameterModel, tie_break: bool) -> RunRecord:
    t0 = time.perf_counter()
    trace: list = []
    ca = generate(model, config, trace=trace, tie_break=tie_break)
    ok, _ = verify(ca)
    return RunRecord(0, config.rng_seed, ca.size, ca.evals_used, time.perf_counter() - t0,
                     verified=ok, payload=ca.rows.tolist(), trace=trace)


def _cluster_run(config: RunConfig, graph_text: str) -> RunRecord:
    mdg = ModuleDependencyGraph.parse(graph_text)
    t0 = time.perf_counter()
    trace: list = []
    res = maximize_mq(mdg, config, trace=trace)
    return RunRecord(0, config.rng_seed, res.score.value, res.search.evals_used,
                     time.perf_counter() - t0, payload=list(res.labels), trace=trace)


@dataclass
class Campaign:
    """``runs`` seeded repetitions of ``task(config, *args)``."""

    task: Callable[..., RunRecord]
    args: tuple
    config: RunConfig
    runs: int = 20
    base_seed: int = 0
    jobs: int = 1

    def seeds(self) -> list[int]:
        return [self.base_seed + r for r in range(self.runs)]

    def execute(self) -> list[RunRecord]:
        configs = [replace(self.config, rng_seed=s) for s in self.seeds()]
        if self.jobs > 1:
            with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                futures = [pool.submit(self.task, cfg, *self.args) for cfg in configs]
                records = [f.result() for f in futures]
        else:
            records = [self.task(cfg, *self.args) for cfg in configs]
        for r, rec in enumerate(records):
            rec.run = r
        return records


def covering_array_campaign(model: ParameterModel, config: RunConfig, runs=20, base_seed=0,
                            jobs=1, tie_break=True) -> Campaign:
    return Campaign(_ca_run, (model, tie_break), config, runs, base_seed, jobs)


def clustering_campaign(mdg: ModuleDependencyGraph, config: RunConfig, runs=20, base_seed=0,
                        jobs=1) -> Campaign:
    return Campaign(_cluster_run, (mdg.dumps(),), config, runs, base_seed, jobs)


def best_run(records: list[RunRecord], sense: str) -> RunRecord:
    key = (lambda r: (r.objective, r.run)) if sense == "min" else (lambda r: (-r.objective, r.run))
    return min(records, key=key)


def config_echo(config: RunConfig, campaign: Campaign, **extra) -> dict:
    out = asdict(config)
    out["selector"] = config.selector.value
    out.pop("rng_seed")
    out.update(runs=campaign.runs, base_seed=campaign.base_seed, **extra)
    return out


def problem_echo(problem) -> dict:
    if isinstance(problem, ParameterModel):
        return {"kind": "covering_array", "model": str(problem), "strength": problem.strength,
                "levels": list(problem.levels), "interactions": InteractionSet(problem).initial_count,
                "lower_bound": lower_bound(problem), "exhaustive_size": problem.exhaustive_size()}
    return {"kind": "module_clustering", "modules": list(problem.names), "edges": len(problem.edges)}


def campaign_report(command: str, problem, campaign: Campaign, records: list[RunRecord],
                    sense: str, **extra_config) -> dict:
    best = best_run(records, sense)
    report = {
        "schema_version": SCHEMA_VERSION,
        "tool": "qemcq",
        "version": __version__,
        "command": command,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "problem": problem_echo(problem),
        "objective": "size" if sense == "min" else "mq",
        "sense": sense,
        "config": config_echo(campaign.config, campaign, **extra_config),
        "seeds": campaign.seeds(),
        "summary": summarize([r.objective for r in records], sense),
        "best_run": best.run,
        "runs": [r.to_json() for r in records],
    }
    if any(r.verified is not None for r in records):
        report["all_verified"] = all(r.verified for r in records)
    return report


def resample_traces(traces: list[list[float]], length: int, points: int = TRACE_POINTS):
    """Average best-so-far traces on a shared grid of evaluation counts.

    Each trace is held at its last value past its end. Returns
    ``(grid, mean_values)``; the grid has at most ``points`` entries.
    """
    if length < 1:
        return [], []
    grid = np.unique(np.round(np.linspace(1, length, min(points, length))).astype(int))
    rows = []
    for tr in traces:
        tr = np.asarray(tr, dtype=float)
        if tr.size == 0:
            continue
        rows.append(tr[np.minimum(grid, tr.size) - 1])
    mean = np.mean(rows, axis=0) if rows else np.zeros(grid.size)
    return grid.tolist(), mean.tolist()
