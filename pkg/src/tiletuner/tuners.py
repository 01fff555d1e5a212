"""Search strategies behind a common ask/tell interface.

``ask`` returns a configuration that has been neither evaluated nor handed
out before; ``tell`` reports its runtime (``None`` for a failed run).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .space import (
    Configuration,
    ParamSpace,
    all_configs,
    config_at,
    encode_many,
    index_of,
    random_config,
    space_size,
)
from .surrogate import BoostParams, ForestParams, fit_boosted, fit_forest, lcb, predict_boosted, predict_forest

TUNER_KINDS = ("random", "grid", "genetic", "boosted", "bayesopt")

FULL_POOL_LIMIT = 4096
SAMPLED_POOL_SIZE = 2048
NO_RUNTIME_PENALTY = 1e6


class SpaceExhausted(Exception):
    """Every configuration of the space has been proposed."""


class Observation(NamedTuple):
    config: Configuration
    runtime: Optional[float]  # None marks a failed evaluation
    value: float  # runtime, or the failure penalty


class Tuner:
    kind = "base"

    def __init__(self, space: ParamSpace, seed: int = 0):
        self.space = space
        self.seed = seed
        self.size = space_size(space)
        self.rng = np.random.default_rng(seed)
        self.history: list[Observation] = []
        self._seen: set[Configuration] = set()
        self._pending: set[Configuration] = set()

    @property
    def exhausted(self) -> bool:
        return len(self._seen) >= self.size

    def ask(self) -> Configuration:
        if self.exhausted:
            raise SpaceExhausted(f"all {self.size} configurations proposed")
        config = self._propose()
        assert config not in self._seen, config
        self._seen.add(config)
        self._pending.add(config)
        return config

    def tell(self, config, runtime: Optional[float]) -> None:
        config = tuple(int(v) for v in config)
        if config not in self._pending:
            raise ValueError(f"{config} was not handed out by ask()")
        self._pending.discard(config)
        failed = runtime is None or not math.isfinite(runtime)
        value = self.failure_penalty() if failed else float(runtime)
        self.history.append(Observation(config, None if failed else float(runtime), value))
        self._observe(config, value)

    def failure_penalty(self) -> float:
        ok = [o.runtime for o in self.history if o.runtime is not None]
        return 10.0 * max(ok) if ok else NO_RUNTIME_PENALTY

    def _propose(self) -> Configuration:
        raise NotImplementedError

    def _observe(self, config: Configuration, value: float) -> None:
        pass

    def _random_unseen(self) -> Configuration:
        # rejection while the space is mostly fresh, explicit choice otherwise
        if len(self._seen) * 2 < self.size:
            while True:
                c = random_config(self.space, self.rng)
                if c not in self._seen:
                    return c
        free = [k for k in range(self.size) if config_at(self.space, k) not in self._seen]
        return config_at(self.space, free[int(self.rng.integers(len(free)))])


class RandomTuner(Tuner):
    kind = "random"

    def _propose(self):
        return self._random_unseen()


class GridTuner(Tuner):
    """Flat indices 0, 1, 2, ... in mixed-radix order."""

    kind = "grid"

    def __init__(self, space, seed=0):
        super().__init__(space, seed)
        self.cursor = 0

    def _propose(self):
        while True:
            c = config_at(self.space, self.cursor)
            self.cursor += 1
            if c not in self._seen:
                return c


@dataclass(frozen=True)
class GaParams:
    pop_size: int = 20
    elite: int = 4
    tournament: int = 3
    crossover_p: float = 0.5
    mutation_p: float = 0.1


class GeneticTuner(Tuner):
    """Generational GA with elitism; fitness is -log(runtime)."""

    kind = "genetic"

    def __init__(self, space, seed=0, params: GaParams = GaParams()):
        super().__init__(space, seed)
        self.params = params
        self.pop_size = min(params.pop_size, self.size)
        self.generation = 0
        self.fitness: dict[Configuration, float] = {}
        self.population: list[Configuration] = []
        while len(self.population) < self.pop_size:
            c = random_config(space, self.rng)
            if c not in self.population:
                self.population.append(c)
        self.queue: list[Configuration] = list(self.population)

    def _propose(self):
        while self.queue:
            c = self.queue.pop(0)
            if c not in self._seen:
                return c
        # only reachable when tells lag behind asks
        return self._random_unseen()

    def _observe(self, config, value):
        self.fitness[config] = -math.log(value)
        if not self.queue and not self._pending:
            self._breed()

    def _tournament(self, ranked: list[Configuration]) -> Configuration:
        picks = self.rng.choice(len(ranked), size=min(self.params.tournament, len(ranked)), replace=False)
        return ranked[int(min(picks))]  # ranked best-first

    def _mutate_gene(self, genes: list[int], i: int) -> None:
        cands = self.space.params[i].candidates
        genes[i] = cands[int(self.rng.integers(len(cands)))]

    def _breed(self) -> None:
        p = self.params
        scored = [c for c in self.population if c in self.fitness]
        ranked = sorted(scored, key=lambda c: -self.fitness[c])
        elites = ranked[: min(p.elite, len(ranked))]
        offspring: list[Configuration] = []
        n_children = self.pop_size - len(elites)
        remaining = self.size - len(self._seen)
        n_children = min(n_children, remaining)
        d = self.space.ndim
        while len(offspring) < n_children:
            a, b = self._tournament(ranked), self._tournament(ranked)
            genes = [a[i] if self.rng.random() < p.crossover_p else b[i] for i in range(d)]
            for i in range(d):
                if self.rng.random() < p.mutation_p:
                    self._mutate_gene(genes, i)
            child = tuple(genes)
            tries = 0
            while child in self._seen or child in offspring:
                if tries > 50 * d:
                    child = self._random_unseen_excluding(offspring)
                    break
                self._mutate_gene(genes, int(self.rng.integers(d)))
                child = tuple(genes)
                tries += 1
            offspring.append(child)
        self.population = elites + offspring
        self.queue = list(offspring)
        self.generation += 1

    def _random_unseen_excluding(self, extra: list[Configuration]) -> Configuration:
        blocked = self._seen | set(extra)
        if len(blocked) * 2 < self.size:
            while True:
                c = random_config(self.space, self.rng)
                if c not in blocked:
                    return c
        free = [k for k in range(self.size) if config_at(self.space, k) not in blocked]
        return config_at(self.space, free[int(self.rng.integers(len(free)))])


class _ModelTuner(Tuner):
    """Shared candidate-pool logic for surrogate-driven tuners.

    Small spaces are scored in full; larger ones use a fresh random sample of
    unevaluated configurations each iteration. Pools are kept in flat-index
    order so ``argmin`` breaks ties toward the lowest index.
    """

    n_init = 10

    def __init__(self, space, seed=0):
        super().__init__(space, seed)
        self.model = None
        self.last_pool: list[Configuration] = []
        if self.size <= FULL_POOL_LIMIT:
            self._all = all_configs(space)
            self._all_x = encode_many(space, self._all)
        else:
            self._all = None

    def candidate_pool(self) -> tuple[list[Configuration], np.ndarray]:
        if self._all is not None:
            keep = [i for i, c in enumerate(self._all) if c not in self._seen]
            return [self._all[i] for i in keep], self._all_x[keep]
        pool: set[Configuration] = set()
        cand = [np.asarray(p.candidates) for p in self.space.params]
        target = min(SAMPLED_POOL_SIZE, self.size - len(self._seen))
        while len(pool) < target:
            draws = np.stack(
                [c[self.rng.integers(len(c), size=SAMPLED_POOL_SIZE)] for c in cand], axis=1
            )
            for row in draws.tolist():
                c = tuple(row)
                if c not in self._seen:
                    pool.add(c)
                    if len(pool) >= target:
                        break
        configs = sorted(pool, key=lambda c: index_of(self.space, c))
        return configs, encode_many(self.space, configs)

    def training_data(self) -> tuple[np.ndarray, np.ndarray]:
        X = encode_many(self.space, [o.config for o in self.history])
        y = np.log([o.value for o in self.history])
        return X, y

    def _propose(self):
        if len(self.history) < self.n_init:
            return self._random_unseen()
        pool, px = self.candidate_pool()
        self.last_pool = pool
        return pool[self._choose(px)]

    def _choose(self, px: np.ndarray) -> int:
        raise NotImplementedError


class BoostedTuner(_ModelTuner):
    """Boosted-tree cost model ranks the pool; epsilon-greedy exploration."""

    kind = "boosted"

    def __init__(self, space, seed=0, params: BoostParams = BoostParams(), n_init: int = 10, epsilon: float = 0.1):
        super().__init__(space, seed)
        self.params = params
        self.n_init = n_init
        self.epsilon = epsilon

    def _choose(self, px):
        X, y = self.training_data()
        self.model = fit_boosted(X, y, self.params, seed=int(self.rng.integers(2**31)))
        if self.rng.random() < self.epsilon:
            return int(self.rng.integers(len(px)))
        return int(np.argmin(predict_boosted(self.model, px)))


class BayesOptTuner(_ModelTuner):
    """Random-forest surrogate with a lower-confidence-bound acquisition.

    After a random initial design of ``max(4, 2*d)`` points the forest is
    refit from scratch every iteration on log-runtimes, and the unevaluated
    candidate minimizing ``mean - kappa * std`` is proposed.
    """

    kind = "bayesopt"

    def __init__(self, space, seed=0, params: ForestParams = ForestParams(), kappa: float = 1.96, n_init: Optional[int] = None):
        super().__init__(space, seed)
        self.params = params
        self.kappa = kappa
        self.n_init = max(4, 2 * space.ndim) if n_init is None else n_init

    def _choose(self, px):
        X, y = self.training_data()
        self.model = fit_forest(X, y, self.params, seed=int(self.rng.integers(2**31)))
        mean, std = predict_forest(self.model, px)
        return int(np.argmin(lcb(mean, std, self.kappa)))


_TUNERS = {t.kind: t for t in (RandomTuner, GridTuner, GeneticTuner, BoostedTuner, BayesOptTuner)}


def make_tuner(kind: str, space: ParamSpace, seed: int = 0, **kwargs) -> Tuner:
    try:
        cls = _TUNERS[kind]
    except KeyError:
        raise KeyError(f"unknown tuner {kind!r}; choose from {', '.join(TUNER_KINDS)}") from None
    return cls(space, seed, **kwargs)
