"""Low-level search operators over bounded integer vectors.

Four operators are provided: Levy-flight perturbation (one coordinate),
flower local pollination, flower global pollination and Jaya. All of them
work on a :class:`Population` in place, accept a candidate only when it is
strictly fitter than the individual it would replace, and report the best
individual seen during the call.

Candidates equal to the individual they were derived from are not sent to
the fitness function: they cannot pass the strict ``>`` test and skipping
them saves budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "LevyParams",
    "OperatorOutcome",
    "Population",
    "discretize",
    "global_pollination",
    "jaya",
    "lanczos_gamma",
    "levy_flight_perturbation",
    "levy_step",
    "levy_steps",
    "local_pollination",
    "mantegna_sigma_u",
]

Fitness = Callable[[np.ndarray], float]

# g = 7, n = 9 Lanczos coefficients
_LANCZOS_G = 7
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def lanczos_gamma(x: float) -> float:
    """Gamma function by the Lanczos approximation (relative error ~1e-15)."""
    if x < 0.5:
        # reflection formula
        return math.pi / (math.sin(math.pi * x) * lanczos_gamma(1.0 - x))
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i in range(1, _LANCZOS_G + 2):
        acc += _LANCZOS_COEF[i] / (x + i)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (x + 0.5) * math.exp(-t) * acc


def mantegna_sigma_u(beta: float) -> float:
    """Scale of the numerator Gaussian in Mantegna's Levy-stable generator."""
    num = lanczos_gamma(1.0 + beta) * math.sin(math.pi * beta / 2.0)
    den = lanczos_gamma((1.0 + beta) / 2.0) * beta * 2.0 ** ((beta - 1.0) / 2.0)
    return abs(num / den) ** (1.0 / beta)


@dataclass(frozen=True)
class LevyParams:
    beta: float = 1.5
    sigma_v: float = 1.0
    alpha: float = 1.0
    sigma_u: float = field(init=False)

    def __post_init__(self):
        if not 1.0 < self.beta <= 2.0:
            raise ValueError(f"beta must lie in (1, 2], got {self.beta}")
        object.__setattr__(self, "sigma_u", mantegna_sigma_u(self.beta))


def levy_step(params: LevyParams, rng: np.random.Generator) -> float:
    """Draw one Levy-flight step length ``u / |v|**(1/beta)``.

    ``u`` and ``v`` are zero-mean Gaussians with standard deviations
    ``sigma_u`` and ``sigma_v``. ``v`` is redrawn if it is exactly zero.
    """
    u = rng.standard_normal() * params.sigma_u
    v = 0.0
    while v == 0.0:
        v = rng.standard_normal() * params.sigma_v
    return u / abs(v) ** (1.0 / params.beta)


def levy_steps(params: LevyParams, rng: np.random.Generator, size) -> np.ndarray:
    """Array of independent Levy steps: all ``u`` draws first, then all ``v``."""
    u = rng.standard_normal(size) * params.sigma_u
    v = rng.standard_normal(size) * params.sigma_v
    zero = v == 0.0
    while zero.any():
        v[zero] = rng.standard_normal(int(zero.sum())) * params.sigma_v
        zero = v == 0.0
    return u / np.abs(v) ** (1.0 / params.beta)


def discretize(value, lo, hi):
    """Round half away from zero, then clamp into ``[lo, hi]``.

    Works on scalars and on numpy arrays (element-wise bounds).
    """
    if isinstance(value, (int, float)):
        r = int(math.copysign(math.floor(abs(value) + 0.5), value))
        return min(max(r, int(lo)), int(hi))
    out = np.minimum(np.maximum(np.trunc(value + np.copysign(0.5, value)), lo), hi)
    if np.ndim(out) == 0:
        return int(out)
    return out.astype(np.int64)


@dataclass
class Population:
    """Solution vectors (one per row of ``X``) with cached fitness values.

    ``repair``, if set, maps every candidate to a canonical in-bounds vector
    before it is compared or evaluated (for encodings with symmetries).
    """

    X: np.ndarray
    fit: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    repair: Callable[[np.ndarray], np.ndarray] | None = None

    @classmethod
    def random(cls, size, lower, upper, fitness: Fitness, rng: np.random.Generator,
               repair=None) -> Population:
        lower = np.asarray(lower, dtype=np.int64)
        upper = np.asarray(upper, dtype=np.int64)
        X = rng.integers(lower, upper + 1, size=(size, lower.size), dtype=np.int64)
        if repair is not None:
            X = np.array([repair(x) for x in X], dtype=np.int64).reshape(X.shape)
        fit = np.empty(size)
        for i in range(size):
            fit[i] = fitness(X[i])
        return cls(X, fit, lower, upper, repair)

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def dimension(self) -> int:
        return self.X.shape[1]

    def best_index(self) -> int:
        return int(np.argmax(self.fit))

    def copy(self) -> Population:
        return Population(self.X.copy(), self.fit.copy(), self.lower, self.upper, self.repair)


@dataclass
class OperatorOutcome:
    population: Population
    best: np.ndarray
    best_fitness: float
    improved: bool
    poor: np.ndarray | None = None
    poor_fitness: float | None = None
    degenerate: bool = False


class _Tracker:
    """Greedy replacement plus best-so-far bookkeeping shared by all operators."""

    def __init__(self, pop: Population, best=None, best_fitness=None):
        self.pop = pop
        if best is None:
            self.best = pop.X[0].copy()
            self.best_fitness = float(pop.fit[0])
        else:
            self.best = np.array(best, dtype=np.int64)
            self.best_fitness = float(best_fitness)
        self.improved = False

    def offer(self, i: int, cand: np.ndarray, fitness: Fitness) -> bool:
        pop = self.pop
        if pop.repair is not None:
            cand = np.asarray(pop.repair(cand), dtype=np.int64)
        if not (cand != pop.X[i]).any():
            f_new = None
        else:
            f_new = fitness(cand)
        if f_new is not None and f_new > pop.fit[i]:
            pop.X[i] = cand
            pop.fit[i] = f_new
            self.improved = True
            if f_new > self.best_fitness:
                self.best = cand.copy()
                self.best_fitness = float(f_new)
            return True
        if pop.fit[i] > self.best_fitness:
            self.best = pop.X[i].copy()
            self.best_fitness = float(pop.fit[i])
        return False

    def outcome(self, **extra) -> OperatorOutcome:
        return OperatorOutcome(self.pop, self.best, self.best_fitness, self.improved, **extra)


def levy_flight_perturbation(
    pop: Population,
    fitness: Fitness,
    rng: np.random.Generator,
    params: LevyParams = LevyParams(),
) -> OperatorOutcome:
    """Perturb one randomly chosen coordinate of every individual by a Levy step.

    Draws, for the whole population at once: the Levy steps, then the
    coordinate indices.
    """
    n = len(pop)
    steps = levy_steps(params, rng, n)
    cols = rng.integers(pop.dimension, size=n)
    track = _Tracker(pop)
    for i in range(n):
        j = cols[i]
        cand = pop.X[i].copy()
        cand[j] = discretize(cand[j] + params.alpha * steps[i], pop.lower[j], pop.upper[j])
        track.offer(i, cand, fitness)
    return track.outcome()


def local_pollination(pop: Population, fitness: Fitness, rng: np.random.Generator) -> OperatorOutcome:
    """Move each individual along the difference of two distinct random peers.

    ``X_i + g * (X_p - X_q)`` with ``g`` uniform in [0, 1). A population of
    one has no peers; the call is then the identity and the outcome is
    flagged ``degenerate``.
    """
    n = len(pop)
    if n < 2:
        i = pop.best_index()
        return OperatorOutcome(pop, pop.X[i].copy(), float(pop.fit[i]), False, degenerate=True)
    # distinct peer pairs: q is drawn from the n-1 indices other than p
    p = rng.integers(n, size=n)
    q = rng.integers(n - 1, size=n)
    q += q >= p
    g = rng.random(n)
    track = _Tracker(pop)
    for i in range(n):
        cand = discretize(pop.X[i] + g[i] * (pop.X[p[i]] - pop.X[q[i]]), pop.lower, pop.upper)
        track.offer(i, cand, fitness)
    return track.outcome()


def global_pollination(
    pop: Population,
    fitness: Fitness,
    rng: np.random.Generator,
    best=None,
    best_fitness=None,
    params: LevyParams = LevyParams(),
) -> OperatorOutcome:
    """Pull every coordinate of each individual towards the best by a Levy-scaled step.

    ``X_i + rho * L * (X_best - X_i)`` with ``rho`` uniform in [0, 1) and a
    fresh Levy draw ``L`` per coordinate. The attractor starts at ``best``
    (the population's fittest member if omitted) and follows the running
    best during the sweep.
    """
    if best is None:
        b = pop.best_index()
        best, best_fitness = pop.X[b], pop.fit[b]
    n = len(pop)
    rho = rng.random(n)
    L = levy_steps(params, rng, (n, pop.dimension))
    track = _Tracker(pop, best, best_fitness)
    for i in range(n):
        x = pop.X[i]
        cand = discretize(x + rho[i] * L[i] * (track.best - x), pop.lower, pop.upper)
        track.offer(i, cand, fitness)
    return track.outcome()


def jaya(pop: Population, fitness: Fitness, rng: np.random.Generator) -> OperatorOutcome:
    """Jaya move: towards the best, away from the poorest.

    Both the best and poor trackers start at the first individual. The poor
    tracker only follows individuals that were *not* replaced in this call.
    """
    track = _Tracker(pop)
    poor = pop.X[0].copy()
    poor_fitness = float(pop.fit[0])
    n = len(pop)
    phi = rng.random(n)
    zeta = rng.random(n)
    for i in range(n):
        x = pop.X[i]
        cand = discretize(x + phi[i] * (track.best - x) - zeta[i] * (poor - x), pop.lower, pop.upper)
        if not track.offer(i, cand, fitness) and pop.fit[i] < poor_fitness:
            poor = pop.X[i].copy()
            poor_fitness = float(pop.fit[i])
    return track.outcome(poor=poor, poor_fitness=poor_fitness)
