"""Q-EMCQ selection hyper-heuristic.

The search keeps a population of bounded integer vectors and, each
iteration, applies one of four low-level operators. Operator choice follows
the exponential Monte Carlo with counter (EMCQ) scheme:

* an operator that improved the best fitness is kept while the Metropolis
  draw ``u < exp(-delta * T / q)`` accepts it;
* an operator that failed is replaced. Q-EMCQ first runs one episode cycle
  (each operator once, updating the 4x4 Q-table) and then takes the argmax
  of the Q-row of the current state; plain EMCQ picks one of the other three
  operators uniformly at random.

Random draws, all from the run's single ``numpy.random.Generator``, happen
in this order: initial population, initial operator, then per iteration the
operator's own draws, the Metropolis ``u`` (improving steps) and the
selection draws (argmax tie-breaks or the EMCQ pick).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Callable, Optional

import numpy as np

from .operators import (
    LevyParams,
    Population,
    global_pollination,
    jaya,
    levy_flight_perturbation,
    local_pollination,
)

logger = logging.getLogger(__name__)

__all__ = [
    "BudgetExhausted",
    "Evaluator",
    "OperatorId",
    "QTable",
    "QEMCQSearch",
    "RunConfig",
    "SearchProblem",
    "SearchResult",
    "SearchStopped",
    "Selector",
    "TargetReached",
    "learning_rate",
    "metropolis_accept",
    "reward",
    "run_search",
]


class OperatorId(IntEnum):
    LevyPerturbation = 0
    LocalPollination = 1
    GlobalPollination = 2
    Jaya = 3


N_OPERATORS = len(OperatorId)


class Selector(str, Enum):
    QEMCQ = "qemcq"
    EMCQ = "emcq"


def metropolis_accept(delta: float, T: int, q: int, u: float) -> bool:
    """Exponential Monte Carlo acceptance: ``u < exp(-delta * T / q)``.

    ``delta`` is the non-negative amount by which fitness got worse; a zero
    delta is always accepted.
    """
    if delta <= 0.0:
        return True
    return u < math.exp(-delta * T / q)


def learning_rate(t: int, max_iteration: int) -> float:
    """Linearly decaying Q-learning rate, 1.0 at ``t = 0`` down to 0.1 at the end."""
    return 1.0 - 0.9 * t / max_iteration


def reward(improved: bool) -> float:
    return 1.0 if improved else -1.0


@dataclass
class QTable:
    """State-action memory indexed by (previous operator, next operator)."""

    discount: float = 0.8
    values: np.ndarray = field(default_factory=lambda: np.zeros((N_OPERATORS, N_OPERATORS)))

    def update(self, s: int, a: int, r: float, alpha: float) -> float:
        """One Q-learning step; the next state is the action just taken."""
        q_sa = self.values[s, a]
        target = r + self.discount * self.values[a].max()
        self.values[s, a] = q_sa + alpha * (target - q_sa)
        return float(self.values[s, a])

    def best_action(self, s: int, rng: np.random.Generator, allowed=None) -> OperatorId:
        """Argmax of row ``s`` over ``allowed`` actions, ties broken uniformly."""
        actions = list(range(N_OPERATORS)) if allowed is None else sorted(int(a) for a in allowed)
        row = self.values[s, actions]
        top = np.flatnonzero(row == row.max())
        pick = top[0] if top.size == 1 else rng.choice(top)
        return OperatorId(actions[int(pick)])


@dataclass
class RunConfig:
    population_size: int = 20
    max_iterations: int = 2500
    max_fitness_evals: int = 1500
    rng_seed: int = 0
    selector: Selector = Selector.QEMCQ
    discount: float = 0.8

    def __post_init__(self):
        self.selector = Selector(self.selector)
        if self.population_size < 1 or self.max_iterations < 1 or self.max_fitness_evals < 1:
            raise ValueError("population_size, max_iterations and max_fitness_evals must be positive")
        if self.max_fitness_evals < self.population_size:
            raise ValueError("max_fitness_evals must be at least population_size")
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must lie in [0, 1]")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError("rng_seed must be a 64-bit unsigned integer")


@dataclass
class SearchProblem:
    """Maximize ``fitness`` over integer vectors with ``lower <= x <= upper``.

    If ``target`` is given the search stops as soon as a vector reaches it.
    ``repair`` optionally canonicalizes candidates (it must keep them in
    bounds and must not change their fitness).
    """

    lower: np.ndarray
    upper: np.ndarray
    fitness: Callable[[np.ndarray], float]
    target: Optional[float] = None
    repair: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=np.int64).ravel()
        self.upper = np.asarray(self.upper, dtype=np.int64).ravel()
        if self.lower.shape != self.upper.shape:
            raise ValueError("lower and upper bounds differ in length")
        if np.any(self.lower > self.upper):
            raise ValueError("empty bound range")

    @property
    def dimension(self) -> int:
        return int(self.lower.size)


class SearchStopped(Exception):
    pass


class BudgetExhausted(SearchStopped):
    pass


class TargetReached(SearchStopped):
    pass


class Evaluator:
    """Budgeted fitness wrapper recording the best vector and a best-so-far trace."""

    def __init__(self, fitness, max_evals: int, target: Optional[float] = None):
        self.fitness = fitness
        self.max_evals = max_evals
        self.target = target
        self.evals = 0
        self.best: Optional[np.ndarray] = None
        self.best_fitness = -math.inf
        self.trace: list[float] = []

    @property
    def remaining(self) -> int:
        return self.max_evals - self.evals

    def check(self) -> None:
        if self.evals >= self.max_evals:
            raise BudgetExhausted
        if self.target is not None and self.best_fitness >= self.target:
            raise TargetReached

    def __call__(self, x: np.ndarray) -> float:
        self.check()
        f = float(self.fitness(x))
        self.evals += 1
        if f > self.best_fitness:
            self.best = np.array(x, dtype=np.int64)
            self.best_fitness = f
        self.trace.append(self.best_fitness)
        return f


@dataclass
class SearchResult:
    best: np.ndarray
    best_fitness: float
    evals_used: int
    iterations: int = 0
    episode_cycles: int = 0
    priming_cycles: int = 0
    stop_reason: str = "max_iterations"
    trace: list[float] = field(default_factory=list, repr=False)
    q_values: Optional[np.ndarray] = field(default=None, repr=False)

    def __iter__(self):
        # allows ``best, fitness, evals = run_search(...)``
        return iter((self.best, self.best_fitness, self.evals_used))


class QEMCQSearch:
    """One run of the hyper-heuristic on one problem.

    ``run()`` does everything; the intermediate methods are public so the
    episode mechanics can be driven step by step.
    """

    def __init__(self, problem: SearchProblem, config: RunConfig, rng: Optional[np.random.Generator] = None):
        if problem.dimension == 0:
            raise ValueError("problem dimension must be positive")
        self.problem = problem
        self.config = config
        self.rng = rng if rng is not None else np.random.default_rng(config.rng_seed)
        self.evaluator = Evaluator(problem.fitness, config.max_fitness_evals, problem.target)
        self.table = QTable(discount=config.discount)
        self.levy = LevyParams()
        self.population: Optional[Population] = None
        self.T = 0
        self.q = 1
        self.episode_cycles = 0
        self.priming_cycles = 0
        self.q_updates = 0
        self.executions = 0
        self.non_improving_steps = 0

    def initialize(self) -> None:
        p = self.problem
        self.population = Population.random(
            self.config.population_size, p.lower, p.upper, self.evaluator, self.rng, p.repair
        )

    def execute(self, op: OperatorId) -> bool:
        """Apply ``op`` to the population; True iff the best fitness went up."""
        self.evaluator.check()
        before = self.evaluator.best_fitness
        pop, ev, rng = self.population, self.evaluator, self.rng
        self.executions += 1
        if op is OperatorId.LevyPerturbation:
            levy_flight_perturbation(pop, ev, rng, self.levy)
        elif op is OperatorId.LocalPollination:
            local_pollination(pop, ev, rng)
        elif op is OperatorId.GlobalPollination:
            b = pop.best_index()
            global_pollination(pop, ev, rng, pop.X[b], pop.fit[b], self.levy)
        else:
            jaya(pop, ev, rng)
        return ev.best_fitness > before

    def _learn(self, s: OperatorId, a: OperatorId, improved: bool) -> None:
        alpha = learning_rate(min(self.T, self.config.max_iterations), self.config.max_iterations)
        self.table.update(s, a, reward(improved), alpha)
        self.q_updates += 1

    def episode_cycle(self, start: OperatorId, priming: bool = False) -> OperatorId:
        """Visit every operator once, learning after each, and come back to ``start``.

        Unvisited operators are taken greedily from the current Q-row; the
        last action is always ``start``. Raises :class:`SearchStopped` if the
        budget runs out (updates made so far are kept).
        """
        self.evaluator.check()
        self.episode_cycles += 1
        self.priming_cycles += priming
        state = start
        unvisited = set(OperatorId) - {start}
        while True:
            action = self.table.best_action(state, self.rng, unvisited) if unvisited else start
            improved = self.execute(action)
            self._learn(state, action, improved)
            unvisited.discard(action)
            state = action
            if action == start:
                return state

    def _other_operator(self, current: OperatorId) -> OperatorId:
        others = [op for op in OperatorId if op != current]
        return others[int(self.rng.integers(len(others)))]

    def run(self) -> SearchResult:
        cfg = self.config
        qemcq = cfg.selector is Selector.QEMCQ
        reason = "max_iterations"
        try:
            self.initialize()
            if np.array_equal(self.problem.lower, self.problem.upper):
                reason = "single_point"
                raise SearchStopped
            state = OperatorId(int(self.rng.integers(N_OPERATORS)))
            if qemcq:
                state = self.episode_cycle(state, priming=True)
                current = self.table.best_action(state, self.rng)
            else:
                current = state
            while self.T < cfg.max_iterations:
                self.T += 1
                before = self.evaluator.best_fitness
                improved = self.execute(current)
                if qemcq:
                    self._learn(state, current, improved)
                state = current
                if improved:
                    self.q = 1
                    # population fitness never drops, so delta is 0 here in practice
                    delta = max(0.0, before - self.evaluator.best_fitness)
                    if not metropolis_accept(delta, self.T, self.q, self.rng.random()):
                        current = (
                            self.table.best_action(state, self.rng) if qemcq else self._other_operator(state)
                        )
                else:
                    self.q += 1
                    self.non_improving_steps += 1
                    if qemcq:
                        state = self.episode_cycle(state)
                        current = self.table.best_action(state, self.rng)
                    else:
                        current = self._other_operator(state)
        except BudgetExhausted:
            reason = "budget"
        except TargetReached:
            reason = "target"
        except SearchStopped:
            pass
        ev = self.evaluator
        return SearchResult(
            best=ev.best.copy(),
            best_fitness=ev.best_fitness,
            evals_used=ev.evals,
            iterations=self.T,
            episode_cycles=self.episode_cycles,
            priming_cycles=self.priming_cycles,
            stop_reason=reason,
            trace=ev.trace,
            q_values=self.table.values.copy(),
        )


def run_search(problem: SearchProblem, config: RunConfig, rng: Optional[np.random.Generator] = None) -> SearchResult:
    """Maximize ``problem`` with Q-EMCQ (or plain EMCQ, per ``config.selector``).

    Pass ``rng`` to continue an existing random stream; otherwise one is
    seeded from ``config.rng_seed``.
    """
    return QEMCQSearch(problem, config, rng).run()
