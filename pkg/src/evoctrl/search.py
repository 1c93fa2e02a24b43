"""Population search: regularized evolution (single objective) and NSGA-II
(bi-objective with the survival/reward fitness constraint).

Engines treat evaluation as a callback ``evaluate(program, eval_index) ->
fitness tuple`` so tests can plug synthetic landscapes; the CLI wires in the
cartpole evaluator. With a fixed master seed and serial execution, whole
searches are bit-reproducible.
"""

from __future__ import annotations

import hashlib
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .program import GenConfig, MemoryLayout, Program, random_program
from .textio import serialize
from .variation import MutationWeights, crossover, mutate


@dataclass
class Individual:
    program: Program
    fitness: tuple
    age: int                 # birth counter, strictly increasing
    eval_episodes: int = 0


@dataclass(frozen=True)
class ConstraintSpec:
    """Zero both objectives for policies that survive long while idling."""

    steps_threshold: float = 400.0
    reward_threshold: float = 50.0
    active: bool = True

    def __post_init__(self):
        if self.steps_threshold < 0 or self.reward_threshold < 0:
            raise ValueError("constraint thresholds must be non-negative")


def apply_fitness_constraint(obj_reward: float, obj_steps: float,
                             spec: ConstraintSpec = ConstraintSpec()) -> tuple:
    """(0, 0) iff steps > steps_threshold and reward < reward_threshold."""
    if spec.active and obj_steps > spec.steps_threshold and obj_reward < spec.reward_threshold:
        return (0.0, 0.0)
    return (obj_reward, obj_steps)


# ---------------------------------------------------------------------------
# NSGA-II primitives (maximization on every objective)


def nondominated_sort(points) -> list:
    """Fast nondominated sort; returns fronts as lists of indices."""
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    if n == 0:
        return []
    ge = (pts[:, None, :] >= pts[None, :, :]).all(axis=2)
    gt = (pts[:, None, :] > pts[None, :, :]).any(axis=2)
    dominates = ge & gt                       # [i, j] True iff i dominates j
    dom_count = dominates.sum(axis=0)         # how many dominate j
    fronts = []
    remaining = dom_count.copy()
    assigned = np.zeros(n, dtype=bool)
    while assigned.sum() < n:
        current = np.where((remaining == 0) & ~assigned)[0]
        fronts.append([int(i) for i in current])
        assigned[current] = True
        remaining = remaining - dominates[current].sum(axis=0)
    return fronts


def crowding_distance(front_points) -> list:
    """Crowding distances for one front; boundary points get +inf, interior
    points the sum of range-normalized neighbor gaps per objective (objectives
    with zero range contribute 0)."""
    pts = np.asarray(front_points, dtype=np.float64)
    n = len(pts)
    if n == 0:
        return []
    dist = np.zeros(n)
    for m in range(pts.shape[1]):
        order = np.argsort(pts[:, m], kind="stable")
        lo, hi = pts[order[0], m], pts[order[-1], m]
        dist[order[0]] = dist[order[-1]] = np.inf
        if hi > lo:
            for k in range(1, n - 1):
                gap = pts[order[k + 1], m] - pts[order[k - 1], m]
                dist[order[k]] += gap / (hi - lo)
    return [float(d) for d in dist]


def _rank_and_crowding(pop: list):
    points = [ind.fitness for ind in pop]
    fronts = nondominated_sort(points)
    rank = [0] * len(pop)
    crowd = [0.0] * len(pop)
    for r, front in enumerate(fronts):
        dists = crowding_distance([points[i] for i in front])
        for i, d in zip(front, dists):
            rank[i] = r
            crowd[i] = d
    return fronts, rank, crowd


@dataclass(frozen=True)
class Nsga2Config:
    parent_pop: int = 100
    child_pop: int = 1000
    constraint: ConstraintSpec = field(default_factory=ConstraintSpec)


def _binary_tournament(pop, rank, crowd, rng) -> int:
    i = int(rng.integers(len(pop)))
    j = int(rng.integers(len(pop)))
    if rank[i] != rank[j]:
        return i if rank[i] < rank[j] else j
    if crowd[i] != crowd[j]:
        return i if crowd[i] > crowd[j] else j
    return i if rng.integers(2) == 0 else j


def nsga2_generation(parents: list, evaluate: Callable, rng: np.random.Generator,
                     cfg: Nsga2Config = Nsga2Config(),
                     gen_config: Optional[GenConfig] = None,
                     weights: MutationWeights = MutationWeights(),
                     eval_offset: int = 0,
                     pool: Optional[object] = None) -> list:
    """One generation: tournament selection -> crossover -> mutation ->
    evaluation -> elitist truncation of parents+children back to parent_pop.

    A failed child evaluation yields (0, 0) fitness. ``pool`` (an Executor)
    parallelizes child evaluation without changing results.
    """
    _, rank, crowd = _rank_and_crowding(parents)
    children_programs = []
    for _ in range(cfg.child_pop):
        pa = parents[_binary_tournament(parents, rank, crowd, rng)]
        pb = parents[_binary_tournament(parents, rank, crowd, rng)]
        child = crossover(pa.program, pb.program, rng)
        child = mutate(child, weights, rng, gen_config)
        children_programs.append(child)

    def _eval(args):
        k, prog = args
        try:
            return tuple(evaluate(prog, eval_offset + k))
        except Exception:
            return (0.0, 0.0)

    jobs = list(enumerate(children_programs))
    if pool is not None:
        fits = list(pool.map(_eval, jobs))
    else:
        fits = [_eval(j) for j in jobs]
    base_age = max(ind.age for ind in parents) + 1
    children = [Individual(p, f, base_age + k) for k, (p, f) in
                enumerate(zip(children_programs, fits))]

    combined = list(parents) + children
    fronts, rank_c, crowd_c = _rank_and_crowding(combined)
    survivors: list = []
    for front in fronts:
        if len(survivors) + len(front) <= cfg.parent_pop:
            survivors.extend(front)
        else:
            room = cfg.parent_pop - len(survivors)
            by_crowd = sorted(front, key=lambda i: crowd_c[i], reverse=True)
            survivors.extend(by_crowd[:room])
            break
    return [combined[i] for i in survivors]


# ---------------------------------------------------------------------------
# Regularized evolution


@dataclass(frozen=True)
class RegEvoConfig:
    population: int = 100
    tournament: int = 10
    crossover_prob: float = 0.1


class PopulationStore:
    """Age-ordered population with an atomic sample/insert/evict transaction
    (regularized evolution's aging queue). Safe for worker threads."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._items: deque = deque()
        self._lock = threading.Lock()
        self._births = 0

    def __len__(self):
        return len(self._items)

    def seed_individual(self, program: Program, fitness: tuple) -> Individual:
        with self._lock:
            ind = Individual(program, fitness, self._births)
            self._births += 1
            self._items.append(ind)
            return ind

    def snapshot(self) -> list:
        with self._lock:
            return list(self._items)

    def sample(self, k: int, rng: np.random.Generator) -> list:
        """k distinct individuals, uniform without replacement."""
        with self._lock:
            idx = rng.choice(len(self._items), size=min(k, len(self._items)), replace=False)
            return [self._items[int(i)] for i in idx]

    def insert_evict(self, program: Program, fitness: tuple) -> Individual:
        """Insert a new individual and evict the oldest once at capacity."""
        with self._lock:
            ind = Individual(program, fitness, self._births)
            self._births += 1
            self._items.append(ind)
            while len(self._items) > self.capacity:
                self._items.popleft()
            return ind


def _tournament_best(cands: list, rng: np.random.Generator) -> Individual:
    best = []
    best_fit = None
    for ind in cands:
        if best_fit is None or ind.fitness > best_fit:
            best = [ind]
            best_fit = ind.fitness
        elif ind.fitness == best_fit:
            best.append(ind)
    return best[int(rng.integers(len(best)))]


def regevo_step(store: PopulationStore, evaluate: Callable, cfg: RegEvoConfig,
                rng: np.random.Generator, gen_config: Optional[GenConfig] = None,
                weights: MutationWeights = MutationWeights(),
                eval_index: int = 0) -> Individual:
    """One step: tournament-select a parent, optionally crossover with a
    second tournament winner, mutate, evaluate, insert, evict the oldest."""
    parent = _tournament_best(store.sample(cfg.tournament, rng), rng)
    child = parent.program
    if cfg.crossover_prob > 0 and rng.random() < cfg.crossover_prob:
        other = _tournament_best(store.sample(cfg.tournament, rng), rng)
        child = crossover(child, other.program, rng)
    child = mutate(child, weights, rng, gen_config)
    try:
        fitness = tuple(evaluate(child, eval_index))
    except Exception:
        fitness = (0.0,)
    return store.insert_evict(child, fitness)


# ---------------------------------------------------------------------------
# Full runs with logging


def program_hash(program: Program) -> str:
    return hashlib.sha256(serialize(program).encode()).hexdigest()[:16]


@dataclass
class RunResult:
    best: Individual
    evaluations: int
    log: list                # one dict per logged step/generation


def run_regevo(evaluate: Callable, budget: int, layout: MemoryLayout,
               gen_config: GenConfig, seed: int,
               cfg: RegEvoConfig = RegEvoConfig(),
               weights: MutationWeights = MutationWeights(),
               log_every: int = 100,
               log_sink: Optional[Callable] = None) -> RunResult:
    """Single-objective search to a fixed evaluation budget (init included)."""
    rng = np.random.default_rng(seed)
    store = PopulationStore(cfg.population)
    log: list = []
    best: Optional[Individual] = None
    evals = 0

    def emit(current: Individual):
        row = {
            "evaluations_so_far": evals,
            "best_fitness": best.fitness[0],
            "current_fitness": current.fitness[0],
            "best_hash": program_hash(best.program),
        }
        log.append(row)
        if log_sink is not None:
            log_sink(row)

    n_init = min(cfg.population, budget)
    for _ in range(n_init):
        prog = random_program(layout, gen_config, rng)
        try:
            fit = tuple(evaluate(prog, evals))
        except Exception:
            fit = (0.0,)
        ind = store.seed_individual(prog, fit)
        evals += 1
        if best is None or ind.fitness > best.fitness:
            best = ind
        if evals % log_every == 0 or evals == n_init:
            emit(ind)
    while evals < budget:
        ind = regevo_step(store, evaluate, cfg, rng, gen_config, weights, evals)
        evals += 1
        if ind.fitness > best.fitness:
            best = ind
        if evals % log_every == 0 or evals == budget:
            emit(ind)
    return RunResult(best, evals, log)


def run_nsga2(evaluate: Callable, budget: int, layout: MemoryLayout,
              gen_config: GenConfig, seed: int,
              cfg: Nsga2Config = Nsga2Config(),
              weights: MutationWeights = MutationWeights(),
              log_sink: Optional[Callable] = None,
              pool: Optional[object] = None) -> RunResult:
    """Bi-objective search; logs one row per generation with the Pareto front."""
    rng = np.random.default_rng(seed)
    log: list = []
    evals = 0
    parents: list = []
    for k in range(min(cfg.parent_pop, budget)):
        prog = random_program(layout, gen_config, rng)
        try:
            fit = tuple(evaluate(prog, evals))
        except Exception:
            fit = (0.0, 0.0)
        parents.append(Individual(prog, fit, k))
        evals += 1

    def best_of(pop):
        return max(pop, key=lambda ind: ind.fitness)

    best = best_of(parents)

    def emit(pop):
        fronts, _, _ = _rank_and_crowding(pop)
        front = [{"fitness": list(map(float, pop[i].fitness)),
                  "hash": program_hash(pop[i].program)} for i in fronts[0]]
        row = {
            "evaluations_so_far": evals,
            "best_fitness": list(map(float, best.fitness)),
            "pareto_front": front,
        }
        log.append(row)
        if log_sink is not None:
            log_sink(row)

    emit(parents)
    while evals < budget:
        n_children = min(cfg.child_pop, budget - evals)
        gen_cfg = cfg if n_children == cfg.child_pop else Nsga2Config(
            cfg.parent_pop, n_children, cfg.constraint)
        parents = nsga2_generation(parents, evaluate, rng, gen_cfg, gen_config,
                                   weights, eval_offset=evals, pool=pool)
        evals += n_children
        cand = best_of(parents)
        if cand.fitness > best.fitness:
            best = cand
        emit(parents)
    return RunResult(best, evals, log)
