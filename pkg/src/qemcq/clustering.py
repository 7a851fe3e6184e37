"""Software module clustering by modularization quality (MQ).

A clustering is a label vector over the modules of a weighted, undirected
module dependency graph. Each cluster scores ``i / (i + j/2)`` where ``i``
is the weight of edges inside it and ``j`` the weight of edges leaving it
(0 when ``i`` is 0); MQ is the sum over clusters.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .hh_core import RunConfig, SearchProblem, run_search

__all__ = [
    "ClusteringResult",
    "GraphFormatError",
    "MQScore",
    "ModuleDependencyGraph",
    "brute_force_mq",
    "maximize_mq",
    "mf",
    "mq",
    "mq_value",
    "normalize_labels",
    "random_graph",
    "set_partitions",
]

BRUTE_FORCE_CAP = 10


class GraphFormatError(ValueError):
    pass


class ModuleDependencyGraph:
    """Modules and weighted undirected edges between them, stored as index arrays."""

    def __init__(self, names: Sequence[str], edges=()):
        self.names = tuple(names)
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate module names")
        self._index = {name: i for i, name in enumerate(self.names)}
        self.edges: dict[tuple[int, int], float] = {}
        for e in edges:
            self.add_edge(*e)

    @property
    def n(self) -> int:
        return len(self.names)

    def index(self, name) -> int:
        if isinstance(name, (int, np.integer)):
            return int(name)
        try:
            return self._index[name]
        except KeyError:
            raise ValueError(f"unknown module {name!r}") from None

    def add_edge(self, u, v, weight: float = 1.0) -> None:
        a, b = self.index(u), self.index(v)
        if not (0 <= a < self.n and 0 <= b < self.n):
            raise ValueError(f"edge endpoint out of range: {u}, {v}")
        if a == b:
            raise ValueError(f"self-loop on {self.names[a]!r}")
        if not weight > 0 or not math.isfinite(weight):
            raise ValueError(f"edge weight must be positive, got {weight}")
        key = (min(a, b), max(a, b))
        if key in self.edges:
            raise ValueError(f"duplicate edge {self.names[key[0]]}-{self.names[key[1]]}")
        self.edges[key] = float(weight)
        self._arrays = None

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if getattr(self, "_arrays", None) is None:
            keys = sorted(self.edges)
            eu = np.array([k[0] for k in keys], dtype=np.int64)
            ev = np.array([k[1] for k in keys], dtype=np.int64)
            w = np.array([self.edges[k] for k in keys], dtype=float)
            self._arrays = (eu, ev, w)
        return self._arrays

    def scaled(self, factor: float) -> ModuleDependencyGraph:
        return ModuleDependencyGraph(self.names, [(u, v, w * factor) for (u, v), w in self.edges.items()])

    @classmethod
    def parse(cls, text: str) -> ModuleDependencyGraph:
        """Read the ``modules: a,b,c`` / ``edge: a b [w]`` text format."""
        lines = [(n, ln.strip()) for n, ln in enumerate(text.splitlines(), start=1)]
        lines = [(n, ln) for n, ln in lines if ln and not ln.startswith("#")]
        if not lines or not lines[0][1].startswith("modules:"):
            raise GraphFormatError("first line must be 'modules: name1,name2,...'")
        names = [s.strip() for s in lines[0][1][len("modules:"):].split(",") if s.strip()]
        if not names:
            raise GraphFormatError("no modules declared")
        try:
            g = cls(names)
        except ValueError as exc:
            raise GraphFormatError(str(exc)) from None
        for n, ln in lines[1:]:
            if not ln.startswith("edge:"):
                raise GraphFormatError(f"line {n}: expected 'edge: <u> <v> [<weight>]'")
            parts = ln[len("edge:"):].split()
            if len(parts) not in (2, 3):
                raise GraphFormatError(f"line {n}: expected 2 or 3 fields, got {len(parts)}")
            try:
                weight = float(parts[2]) if len(parts) == 3 else 1.0
                g.add_edge(parts[0], parts[1], weight)
            except ValueError as exc:
                raise GraphFormatError(f"line {n}: {exc}") from None
        return g

    def dumps(self) -> str:
        out = ["modules: " + ",".join(self.names)]
        for (u, v), w in sorted(self.edges.items()):
            out.append(f"edge: {self.names[u]} {self.names[v]} {w:g}")
        return "\n".join(out) + "\n"


@dataclass(frozen=True)
class MQScore:
    value: float
    per_cluster_mf: tuple[float, ...]


@dataclass
class ClusteringResult:
    labels: tuple[int, ...]
    score: MQScore
    search: object = field(default=None, repr=False)

    def __iter__(self):
        return iter((self.labels, self.score))


def _intra_inter(labels: np.ndarray, mdg: ModuleDependencyGraph, n_labels: int):
    eu, ev, w = mdg.arrays()
    lu, lv = labels[eu], labels[ev]
    same = lu == lv
    intra = np.bincount(lu[same], weights=w[same], minlength=n_labels)
    cut = ~same
    inter = (np.bincount(lu[cut], weights=w[cut], minlength=n_labels)
             + np.bincount(lv[cut], weights=w[cut], minlength=n_labels))
    return intra, inter


def _mf_array(intra: np.ndarray, inter: np.ndarray) -> np.ndarray:
    out = np.zeros_like(intra)
    nz = intra > 0
    out[nz] = intra[nz] / (intra[nz] + inter[nz] / 2.0)
    return out


def mf(cluster_id: int, labels, mdg: ModuleDependencyGraph) -> float:
    """Modularization factor of one cluster."""
    labels = np.asarray(labels, dtype=np.int64)
    if cluster_id not in set(labels.tolist()):
        raise ValueError(f"cluster {cluster_id} is not used by the clustering")
    members = labels == cluster_id
    eu, ev, w = mdg.arrays()
    inside_u, inside_v = members[eu], members[ev]
    i = float(w[inside_u & inside_v].sum())
    j = float(w[inside_u ^ inside_v].sum())
    return 0.0 if i == 0 else i / (i + j / 2.0)


def mq_value(labels, mdg: ModuleDependencyGraph) -> float:
    """MQ as a bare float (the search fitness)."""
    labels = np.asarray(labels, dtype=np.int64)
    intra, inter = _intra_inter(labels, mdg, int(labels.max()) + 1 if labels.size else 0)
    return float(_mf_array(intra, inter).sum())


def mq(labels, mdg: ModuleDependencyGraph) -> MQScore:
    """MQ with per-cluster factors, clusters ordered by first appearance."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size != mdg.n:
        raise ValueError(f"expected {mdg.n} labels, got {labels.size}")
    canon = np.array(normalize_labels(labels), dtype=np.int64)
    c = int(canon.max()) + 1 if canon.size else 0
    intra, inter = _intra_inter(canon, mdg, c)
    per = _mf_array(intra, inter)
    return MQScore(float(per.sum()), tuple(float(x) for x in per))


def normalize_labels(labels) -> tuple[int, ...]:
    """Relabel clusters 0, 1, 2, ... in order of first appearance."""
    seen: dict[int, int] = {}
    return tuple(seen.setdefault(int(x), len(seen)) for x in labels)


def _canonical(labels: np.ndarray) -> np.ndarray:
    # vectorized normalize_labels: rank of each label's first occurrence
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inverse]


def set_partitions(n: int) -> Iterator[tuple[int, ...]]:
    """All partitions of ``n`` items as restricted growth strings."""
    if n == 0:
        yield ()
        return
    labels = [0] * n

    def rec(i: int, top: int):
        if i == n:
            yield tuple(labels)
            return
        for v in range(top + 2):
            labels[i] = v
            yield from rec(i + 1, max(top, v))

    yield from rec(1, 0)


def brute_force_mq(mdg: ModuleDependencyGraph, cap: int = BRUTE_FORCE_CAP) -> tuple[tuple[int, ...], MQScore]:
    """Exhaustive MQ optimum; first partition in enumeration order wins ties."""
    if mdg.n > cap:
        raise ValueError(f"brute force limited to {cap} modules, graph has {mdg.n}")
    best, best_val = None, -math.inf
    for labels in set_partitions(mdg.n):
        val = mq_value(labels, mdg)
        if val > best_val:
            best, best_val = labels, val
    return best, mq(best, mdg)


def maximize_mq(mdg: ModuleDependencyGraph, config: RunConfig,
                rng: Optional[np.random.Generator] = None, trace: Optional[list] = None):
    """Search for a high-MQ clustering; unpacks as ``(labels, MQScore)``.

    Each module's label ranges over ``0 .. n-1``, so any partition is reachable.
    """
    n = mdg.n
    if n < 1:
        raise ValueError("graph has no modules")
    problem = SearchProblem(np.zeros(n, dtype=np.int64), np.full(n, n - 1, dtype=np.int64),
                            lambda x: mq_value(x, mdg), repair=_canonical)
    result = run_search(problem, config, rng)
    if trace is not None:
        trace.extend(result.trace)
    labels = normalize_labels(result.best)
    return ClusteringResult(labels, mq(labels, mdg), result)


def random_graph(n: int, p: float, rng: np.random.Generator, weight: float = 1.0) -> ModuleDependencyGraph:
    """Erdos-Renyi graph on modules ``m0 .. m{n-1}`` with a common edge weight."""
    g = ModuleDependencyGraph([f"m{i}" for i in range(n)])
    for u, v in itertools.combinations(range(n), 2):
        if rng.random() < p:
            g.add_edge(u, v, weight)
    return g
