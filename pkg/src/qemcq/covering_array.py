"""t-wise covering arrays built one test at a time.

Each round runs the hyper-heuristic to find the row that covers the most
still-uncovered t-way interactions, appends it, and removes what it covers.
:func:`verify` is a separate brute-force checker that shares no code with
the generator.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .hh_core import RunConfig, SearchProblem, run_search

logger = logging.getLogger(__name__)

__all__ = [
    "CoveringArray",
    "InteractionSet",
    "InteractionTuple",
    "ParameterModel",
    "RowObjective",
    "enumerate_interactions",
    "exhaustive_array",
    "generate",
    "lower_bound",
    "read_csv",
    "row_fitness",
    "verify",
    "write_csv",
]


@dataclass(frozen=True)
class ParameterModel:
    """Interaction strength ``t`` and the number of values of each parameter."""

    strength: int
    levels: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(int(v) for v in self.levels))
        if any(v < 2 for v in self.levels):
            raise ValueError("every parameter needs at least 2 values")
        if self.strength > len(self.levels):
            raise ValueError(
                f"strength t={self.strength} exceeds the number of parameters k={len(self.levels)}"
            )
        if self.strength < 2:
            raise ValueError("strength must be at least 2")

    @property
    def k(self) -> int:
        return len(self.levels)

    def exhaustive_size(self) -> int:
        return math.prod(self.levels)

    def __str__(self) -> str:
        groups = [f"{v}^{len(list(g))}" for v, g in itertools.groupby(self.levels)]
        return f"t={self.strength} " + " ".join(groups)


class InteractionTuple(NamedTuple):
    columns: tuple[int, ...]
    values: tuple[int, ...]


class InteractionSet:
    """Uncovered t-way tuples of a model.

    Tuples are addressed by (column subset, mixed-radix code of the values)
    and stored as one flat boolean mask, so scoring a row is a single gather.
    """

    def __init__(self, model: ParameterModel):
        self.model = model
        t = model.strength
        levels = np.array(model.levels, dtype=np.int64)
        self.subsets = list(itertools.combinations(range(model.k), t))
        self._cols = np.array(self.subsets, dtype=np.int64).reshape(len(self.subsets), t)
        sub_levels = levels[self._cols]
        # radix of column j inside a subset = product of the levels to its right
        radix = np.ones_like(sub_levels)
        for j in range(t - 2, -1, -1):
            radix[:, j] = radix[:, j + 1] * sub_levels[:, j + 1]
        self._radix = radix
        self._sizes = sub_levels.prod(axis=1)
        self._offsets = np.concatenate(([0], np.cumsum(self._sizes)[:-1]))
        self.initial_count = int(self._sizes.sum())
        self._uncovered = np.ones(self.initial_count, dtype=bool)
        self._per_subset = self._sizes.copy()
        # flat (column, value) id of every position of every tuple, for value_pressure()
        self.value_offsets = np.concatenate(([0], np.cumsum(levels)[:-1]))
        cv = []
        for s, cols in enumerate(self.subsets):
            codes = np.arange(self._sizes[s])
            digits = (codes[:, None] // self._radix[s]) % sub_levels[s]
            cv.append(self.value_offsets[list(cols)] + digits)
        self._cv = np.concatenate(cv).reshape(self.initial_count, t)

    def __len__(self) -> int:
        return int(self._per_subset.sum())

    @property
    def uncovered_count(self) -> int:
        return len(self)

    def is_empty(self) -> bool:
        return len(self) == 0

    def _indices(self, row) -> np.ndarray:
        row = np.asarray(row, dtype=np.int64)
        return self._offsets + (row[self._cols] * self._radix).sum(axis=1)

    def count_covered_by(self, row) -> int:
        return int(self._uncovered[self._indices(row)].sum())

    def max_row_gain(self) -> int:
        """Upper bound on what one row can still cover: subsets with anything left."""
        return int((self._per_subset > 0).sum())

    def value_pressure(self) -> np.ndarray:
        """Uncovered-tuple count for each (column, value), flattened column-major by value."""
        ids = self._cv[self._uncovered].ravel()
        return np.bincount(ids, minlength=int(sum(self.model.levels)))

    def cover(self, row) -> int:
        """Mark everything ``row`` covers; return how many tuples were new."""
        idx = self._indices(row)
        hit = self._uncovered[idx]
        self._uncovered[idx] = False
        self._per_subset -= hit
        return int(hit.sum())

    def _decode(self, flat: int) -> InteractionTuple:
        s = int(np.searchsorted(self._offsets, flat, side="right") - 1)
        code = flat - int(self._offsets[s])
        values = []
        for r in self._radix[s]:
            values.append(code // int(r))
            code %= int(r)
        return InteractionTuple(self.subsets[s], tuple(values))

    def __iter__(self) -> Iterator[InteractionTuple]:
        for flat in np.flatnonzero(self._uncovered):
            yield self._decode(int(flat))

    def __contains__(self, tup: InteractionTuple) -> bool:
        s = self.subsets.index(tuple(tup.columns))
        code = int(np.dot(tup.values, self._radix[s]))
        return bool(self._uncovered[self._offsets[s] + code])

    def first_uncovered(self) -> Optional[InteractionTuple]:
        hits = np.flatnonzero(self._uncovered)
        return self._decode(int(hits[0])) if hits.size else None


def enumerate_interactions(model: ParameterModel) -> InteractionSet:
    return InteractionSet(model)


def row_fitness(row, uncovered: InteractionSet) -> int:
    """Number of still-uncovered tuples that ``row`` matches."""
    return uncovered.count_covered_by(row)


def lower_bound(model: ParameterModel) -> int:
    return max(math.prod(model.levels[c] for c in cols)
               for cols in itertools.combinations(range(model.k), model.strength))


@dataclass
class CoveringArray:
    model: ParameterModel
    rows: np.ndarray
    rounds: list[dict] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.int64).reshape(-1, self.model.k)

    @property
    def size(self) -> int:
        return int(self.rows.shape[0])

    @property
    def evals_used(self) -> int:
        return sum(r["evals"] for r in self.rounds)


class RowObjective:
    """Search fitness for one round: new tuples covered, with a sub-unit tie-break.

    Among rows covering equally many new tuples, the one whose values have
    the fewest uncovered tuples left wins. Finishing off nearly exhausted
    values while a full-gain row is still available keeps later rows from
    revisiting them at a loss. The penalty stays below 1, so rows are never
    reordered across different coverage counts. With ``tie_break=False`` the
    fitness is the plain count.
    """

    def __init__(self, uncovered: InteractionSet, tie_break: bool = True):
        self.uncovered = uncovered
        self.tie_break = tie_break
        self.max_gain = uncovered.max_row_gain()
        if tie_break:
            self.pressure = uncovered.value_pressure().astype(float)
            offs = uncovered.value_offsets
            per_col = [self.pressure[o:o + v] for o, v in zip(offs, uncovered.model.levels)]
            self.weight = 1.0 / (1.0 + sum(float(c.max()) for c in per_col))
            self._offsets = offs
            self.target = self.max_gain - self.weight * sum(float(c.min()) for c in per_col)
        else:
            self.target = float(self.max_gain)

    def gain(self, fitness: float) -> int:
        return math.ceil(fitness) if self.tie_break else int(fitness)

    def __call__(self, row) -> float:
        g = self.uncovered.count_covered_by(row)
        if not self.tie_break:
            return float(g)
        return g - self.weight * float(self.pressure[self._offsets + row].sum())


def _fallback_row(uncovered: InteractionSet, rng: np.random.Generator) -> np.ndarray:
    tup = uncovered.first_uncovered()
    levels = np.array(uncovered.model.levels)
    row = rng.integers(0, levels)
    row[list(tup.columns)] = tup.values
    return row


def generate(model: ParameterModel, config: RunConfig, rng: Optional[np.random.Generator] = None,
             trace: Optional[list] = None, tie_break: bool = True) -> CoveringArray:
    """Build a covering array for ``model``, one searched row per round.

    A round stops early once a row reaches the best value still possible.
    If ``trace`` is a list, the number of tuples covered so far (counting the
    current round's best row) is appended after every fitness evaluation.
    """
    rng = rng if rng is not None else np.random.default_rng(config.rng_seed)
    uncovered = InteractionSet(model)
    lower = np.zeros(model.k, dtype=np.int64)
    upper = np.array(model.levels, dtype=np.int64) - 1
    rows, rounds = [], []
    while not uncovered.is_empty():
        objective = RowObjective(uncovered, tie_break)
        problem = SearchProblem(lower, upper, objective, target=objective.target)
        result = run_search(problem, config, rng)
        row = result.best
        fallback = False
        if uncovered.count_covered_by(row) == 0:
            row = _fallback_row(uncovered, rng)
            fallback = True
            logger.info("round %d: search found no covering row, built one from an uncovered tuple",
                        len(rows) + 1)
        if trace is not None:
            done = uncovered.initial_count - len(uncovered)
            trace.extend(done + max(objective.gain(f), 0) for f in result.trace)
        gain = uncovered.cover(row)
        rows.append(row)
        rounds.append({"gain": gain, "evals": result.evals_used, "stop": result.stop_reason,
                       "episode_cycles": result.episode_cycles, "fallback": fallback})
    return CoveringArray(model, np.array(rows), rounds)


def exhaustive_array(model: ParameterModel) -> CoveringArray:
    return CoveringArray(model, list(itertools.product(*(range(v) for v in model.levels))))


def verify(array: CoveringArray) -> tuple[bool, list[InteractionTuple]]:
    """Brute-force coverage check. Returns ``(ok, missing_tuples)``."""
    model = array.model
    rows = [tuple(int(x) for x in r) for r in array.rows]
    for r in rows:
        if len(r) != model.k:
            raise ValueError(f"row {r} has {len(r)} values, expected {model.k}")
        for v, lv in zip(r, model.levels):
            if not 0 <= v < lv:
                raise ValueError(f"row {r} has out-of-range value {v}")
    missing = []
    for cols in itertools.combinations(range(model.k), model.strength):
        seen = {tuple(r[c] for c in cols) for r in rows}
        for vals in itertools.product(*(range(model.levels[c]) for c in cols)):
            if vals not in seen:
                missing.append(InteractionTuple(cols, vals))
    return not missing, missing


def write_csv(array: CoveringArray, fh=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"p{i + 1}" for i in range(array.model.k)])
    w.writerows(array.rows.tolist())
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def read_csv(text: str, model: ParameterModel) -> CoveringArray:
    """Parse an array written by :func:`write_csv`; raises ValueError on bad input."""
    lines = list(csv.reader(io.StringIO(text)))
    lines = [ln for ln in lines if ln and any(c.strip() for c in ln)]
    if not lines:
        raise ValueError("empty CSV")
    header = [c.strip() for c in lines[0]]
    if header != [f"p{i + 1}" for i in range(model.k)]:
        raise ValueError(f"unexpected header {header}")
    rows: list[Sequence[int]] = []
    for n, ln in enumerate(lines[1:], start=2):
        try:
            r = [int(c) for c in ln]
        except ValueError:
            raise ValueError(f"line {n}: non-integer value") from None
        if len(r) != model.k:
            raise ValueError(f"line {n}: expected {model.k} values, got {len(r)}")
        for v, lv in zip(r, model.levels):
            if not 0 <= v < lv:
                raise ValueError(f"line {n}: value {v} out of range [0, {lv - 1}]")
        rows.append(r)
    return CoveringArray(model, np.array(rows, dtype=np.int64).reshape(-1, model.k))
