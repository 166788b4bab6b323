"""Mutation-only multi-objective neuroevolution with a pan-generational archive.

Each generation every survivor and every mutated offspring flies the same
four freshly randomized landings (one per start altitude) from shared seeds,
is scored on four minimized objectives, and competes in rank/crowding
truncation. Every evaluation record ever produced feeds an archive that is
re-pruned to the non-dominated set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from .env import (
    CEILING_MARGIN,
    MAX_EPISODE_TIME,
    OUTCOME_FLYAWAY,
    EnvParams,
    EpisodeResult,
    run_episode,
    sample_env_params,
)
from .network import (
    ALPHA_RANGE,
    TAU_RANGE,
    THRESH_RANGE,
    DecoderParams,
    Genome,
    NeuronParams,
)

__all__ = [
    "OBJECTIVE_NAMES",
    "H0_SCHEDULE",
    "PUNISH_TIME",
    "PUNISH_MIN_TOUCHDOWN",
    "ObjectiveVector",
    "Individual",
    "MutationConfig",
    "EvolutionConfig",
    "ParetoArchive",
    "ArchiveEntry",
    "derived_rng",
    "random_genome",
    "init_population",
    "mutate",
    "episode_objectives",
    "evaluate",
    "dominates",
    "non_dominated_sort",
    "sort_population",
    "crowding_distance",
    "select_survivors",
    "evolve_generation",
    "run_evolution",
    "merge_archives",
]

OBJECTIVE_NAMES = ("time_to_land", "final_height", "touchdown_speed", "spike_rate")
N_OBJECTIVES = 4

# Landings per evaluation, paired in order with the generation's environments.
H0_SCHEDULE = (2.0, 4.0, 6.0, 8.0)

# Scores assigned to episodes that never touch down.
PUNISH_TIME = 2.0 * MAX_EPISODE_TIME
PUNISH_MIN_TOUCHDOWN = 5.0

# Initial hyperparameter constants shared by every neuron at generation 0.
INIT_ALPHA_MEM = 0.2
INIT_ALPHA_THRESH = 0.2
INIT_ALPHA_TRACE = 1.0
INIT_TAU = 0.8
INIT_THRESH = 0.2

# Seed-tree domains: (seed, domain, ...) keys SeedSequence entropy.
_DOMAIN_INIT = 0
_DOMAIN_REPRO = 1
_DOMAIN_ENVS = 2
_DOMAIN_EPISODE = 3


def derived_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one (seed, domain, ...) node of the run."""
    return np.random.default_rng(np.random.SeedSequence((seed, *key)))


@dataclass(frozen=True)
class ObjectiveVector:
    """Four minimized scores averaged over one evaluation's landings."""

    time_to_land: float
    final_height: float
    touchdown_speed: float
    spike_rate: float

    def __post_init__(self) -> None:
        for name, value in zip(OBJECTIVE_NAMES, self.as_tuple()):
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name}={value!r} must be finite and nonnegative")
            object.__setattr__(self, name, float(value))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.time_to_land, self.final_height,
                self.touchdown_speed, self.spike_rate)


@dataclass
class Individual:
    genome: Genome
    id: int
    lineage: int | None = None
    objectives: ObjectiveVector | None = None
    rank: int | None = None
    crowding: float | None = None


@dataclass(frozen=True)
class MutationConfig:
    """Per-gene redraw probability and the constrained-range switch."""

    p_mut: float = 0.3
    constrained: bool = False

    def __post_init__(self) -> None:
        if not 0 <= self.p_mut <= 1:
            raise ValueError(f"p_mut must lie in [0, 1], got {self.p_mut}")


def random_genome(n_hidden: int, rng: np.random.Generator) -> Genome:
    """Uniform random weights in [0, 1); hyperparameters at shared constants."""
    cols = n_hidden if n_hidden else 1
    w_in = tuple(tuple(float(x) for x in row) for row in rng.random((4, cols)))
    w_out = tuple(float(x) for x in rng.random(n_hidden))
    neuron = NeuronParams(INIT_ALPHA_MEM, INIT_TAU, INIT_ALPHA_THRESH, INIT_TAU, INIT_THRESH)
    return Genome(
        n_hidden=n_hidden,
        w_in=w_in,
        w_out=w_out,
        hidden_neurons=(neuron,) * n_hidden,
        output_neuron=neuron,
        decoder=DecoderParams(INIT_ALPHA_TRACE, INIT_TAU),
    )


def init_population(size: int, n_hidden: int, rng: np.random.Generator) -> list[Individual]:
    if size < 1:
        raise ValueError(f"population size must be positive, got {size}")
    return [Individual(genome=random_genome(n_hidden, rng), id=i) for i in range(size)]


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def mutate(genome: Genome, config: MutationConfig, rng: np.random.Generator) -> Genome:
    """Independently redraw each gene with probability ``p_mut``.

    Weights redraw from a uniform window that always covers sign flips;
    hyperparameters perturb uniformly and clamp to their ranges, with the
    constrained variant halving the filter-gain window and forbidding fast
    leaks (tau below 0.3). The input genome is never modified.
    """
    p = config.p_mut
    alpha_half = 1.0 / 3.0 if config.constrained else 2.0 / 3.0
    alpha_hi = 1.0 if config.constrained else ALPHA_RANGE[1]
    tau_lo = 0.3 if config.constrained else TAU_RANGE[0]

    def mut_weight(w: float) -> float:
        if rng.random() >= p:
            return w
        a = -w - 0.05
        b = 2.0 * w + 0.05
        lo, hi = (a, b) if a <= b else (b, a)
        return float(rng.uniform(lo, hi))

    def mut_alpha(x: float) -> float:
        if rng.random() >= p:
            return x
        return _clamp(float(rng.uniform(x - alpha_half, x + alpha_half)), 0.0, alpha_hi)

    def mut_tau(x: float) -> float:
        if rng.random() >= p:
            return x
        return _clamp(float(rng.uniform(x - 1.0 / 3.0, x + 1.0 / 3.0)), tau_lo, TAU_RANGE[1])

    def mut_thresh(x: float) -> float:
        if rng.random() >= p:
            return x
        return _clamp(float(rng.uniform(x - 1.0 / 3.0, x + 1.0 / 3.0)), *THRESH_RANGE)

    def mut_neuron(n: NeuronParams) -> NeuronParams:
        return NeuronParams(
            alpha_mem=mut_alpha(n.alpha_mem),
            tau_mem=mut_tau(n.tau_mem),
            alpha_thresh=mut_alpha(n.alpha_thresh),
            tau_thresh=mut_tau(n.tau_thresh),
            thresh_init=mut_thresh(n.thresh_init),
        )

    w_in = tuple(tuple(mut_weight(w) for w in row) for row in genome.w_in)
    w_out = tuple(mut_weight(w) for w in genome.w_out)
    hidden = tuple(mut_neuron(h) for h in genome.hidden_neurons)
    output = mut_neuron(genome.output_neuron)
    decoder = DecoderParams(
        alpha_trace=mut_alpha(genome.decoder.alpha_trace),
        tau_trace=mut_tau(genome.decoder.tau_trace),
        out_min=genome.decoder.out_min,
        out_max=genome.decoder.out_max,
    )
    return Genome(genome.n_hidden, w_in, w_out, hidden, output, decoder)


def episode_objectives(result: EpisodeResult, h0: float) -> tuple[float, float, float, float]:
    """Score one episode; non-landings take fixed punishment values."""
    if result.landed:
        time_to_land = result.duration
        final_height = max(0.0, result.final_h)
        touchdown_speed = abs(result.final_v)
    else:
        time_to_land = PUNISH_TIME
        touchdown_speed = max(abs(result.final_v), PUNISH_MIN_TOUCHDOWN)
        if result.outcome == OUTCOME_FLYAWAY:
            final_height = h0 + CEILING_MARGIN
        else:
            final_height = max(0.0, result.final_h)
    spike_rate = result.total_spikes / result.duration
    return (time_to_land, final_height, touchdown_speed, spike_rate)


def evaluate(controller, envs, episode_seeds, h0s=H0_SCHEDULE) -> ObjectiveVector:
    """Average the per-landing scores over the paired (h0, env, seed) triples."""
    sums = [0.0, 0.0, 0.0, 0.0]
    count = 0
    for h0, env, seed in zip(h0s, envs, episode_seeds, strict=True):
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        result = run_episode(controller, h0, env, rng)
        for k, value in enumerate(episode_objectives(result, h0)):
            sums[k] += value
        count += 1
    return ObjectiveVector(*(s / count for s in sums))


def dominates(a, b) -> bool:
    """Strict Pareto domination between minimized objective tuples."""
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def non_dominated_sort(values) -> list[list[int]]:
    """Peel minimized objective vectors into successive non-dominated fronts.

    Returns index lists, best front first, ascending within a front. Every
    index appears exactly once.
    """
    v = np.asarray(values, dtype=float)
    n = len(v)
    if n == 0:
        return []
    if v.ndim != 2:
        raise ValueError("expected a 2-d array of objective vectors")
    le = (v[:, None, :] <= v[None, :, :]).all(axis=2)
    lt = (v[:, None, :] < v[None, :, :]).any(axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    n_dominators = dom.sum(axis=0)
    assigned = np.zeros(n, dtype=bool)
    fronts: list[list[int]] = []
    current = np.where(n_dominators == 0)[0]
    while current.size:
        fronts.append([int(i) for i in current])
        assigned[current] = True
        n_dominators = n_dominators - dom[current].sum(axis=0)
        current = np.where((n_dominators == 0) & ~assigned)[0]
    return fronts


def crowding_distance(values) -> np.ndarray:
    """Crowding distance within one front of minimized objective vectors.

    Boundary members per objective score infinity; interior members sum the
    span-normalized gap between their neighbors. Fronts of one or two
    members are all infinite.
    """
    v = np.atleast_2d(np.asarray(values, dtype=float))
    n = len(v)
    if n <= 2:
        return np.full(n, np.inf)
    distance = np.zeros(n)
    for m in range(v.shape[1]):
        order = np.argsort(v[:, m], kind="stable")
        col = v[order, m]
        span = col[-1] - col[0]
        distance[order[0]] = np.inf
        distance[order[-1]] = np.inf
        if span > 0:
            distance[order[1:-1]] += (col[2:] - col[:-2]) / span
    return distance


def _masked_values(individuals, mask) -> np.ndarray:
    rows = []
    for ind in individuals:
        if ind.objectives is None:
            raise ValueError(f"individual {ind.id} has not been evaluated")
        rows.append(ind.objectives.as_tuple())
    v = np.asarray(rows, dtype=float)
    cols = [k for k, keep in enumerate(mask) if keep]
    return v[:, cols]


def sort_population(individuals, mask=(True,) * N_OBJECTIVES) -> list[list[Individual]]:
    """Non-dominated fronts of evaluated individuals under the objective mask."""
    fronts = non_dominated_sort(_masked_values(individuals, mask))
    return [[individuals[i] for i in front] for front in fronts]


def select_survivors(pool, mu: int, mask=(True,) * N_OBJECTIVES) -> list[Individual]:
    """Rank/crowding truncation of an evaluated pool down to ``mu`` members.

    Whole fronts enter in rank order; the critical front is cut by crowding
    distance, larger first, ties resolved by front order. Also annotates
    every pool member's rank and crowding for later parent selection.
    """
    if len(pool) < mu:
        raise ValueError(f"pool of {len(pool)} cannot fill {mu} survivor slots")
    values = _masked_values(pool, mask)
    fronts = non_dominated_sort(values)
    survivors: list[Individual] = []
    for rank, front in enumerate(fronts):
        distance = crowding_distance(values[front])
        for pos, i in enumerate(front):
            pool[i].rank = rank
            pool[i].crowding = float(distance[pos])
        free = mu - len(survivors)
        if free >= len(front):
            survivors.extend(pool[i] for i in front)
        elif free > 0:
            order = np.argsort(-distance, kind="stable")
            survivors.extend(pool[front[int(j)]] for j in order[:free])
    return survivors


def _record_key(entry: "ArchiveEntry") -> tuple[int, int, int]:
    return (entry.seed, entry.generation, entry.individual_id)


@dataclass(frozen=True)
class ArchiveEntry:
    """One evaluation record: a genome and the scores it earned that generation."""

    genome: Genome
    objectives: ObjectiveVector
    individual_id: int
    generation: int
    lineage: int | None
    seed: int


class ParetoArchive:
    """Pan-generational set of mutually non-dominated evaluation records.

    Records are identified by (run seed, generation, individual id), so a
    parent re-evaluated in a later generation contributes a fresh record
    rather than overwriting its old one; absorbing the same record twice is
    a no-op. Domination uses only the objectives enabled in the mask.
    """

    def __init__(self, objective_mask=(True,) * N_OBJECTIVES, entries=()):
        mask = tuple(bool(b) for b in objective_mask)
        if len(mask) != N_OBJECTIVES or not any(mask):
            raise ValueError(f"bad objective mask {objective_mask!r}")
        self.objective_mask = mask
        self._cols = [k for k, keep in enumerate(mask) if keep]
        self._entries: list[ArchiveEntry] = []
        self._values = np.empty((0, len(self._cols)))
        self._seen: set[tuple[int, int, int]] = set()
        if entries:
            self.absorb(entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self.members)

    @property
    def members(self) -> tuple[ArchiveEntry, ...]:
        """Entries in a stable (seed, generation, id) order."""
        return tuple(sorted(self._entries, key=_record_key))

    def _entry_values(self, entries) -> np.ndarray:
        return np.asarray(
            [[e.objectives.as_tuple()[k] for k in self._cols] for e in entries],
            dtype=float,
        ).reshape(len(entries), len(self._cols))

    def absorb(self, entries) -> None:
        """Add records and re-prune to the non-dominated set."""
        fresh = []
        for e in entries:
            key = _record_key(e)
            if key not in self._seen:
                self._seen.add(key)
                fresh.append(e)
        if not fresh:
            return
        cand = self._entry_values(fresh)
        mem = self._values
        cand_dominated = np.zeros(len(fresh), dtype=bool)
        mem_dominated = np.zeros(len(mem), dtype=bool)
        if len(mem):
            le = (mem[:, None, :] <= cand[None, :, :]).all(axis=2)
            lt = (mem[:, None, :] < cand[None, :, :]).any(axis=2)
            cand_dominated = (le & lt).any(axis=0)
            le = (cand[:, None, :] <= mem[None, :, :]).all(axis=2)
            lt = (cand[:, None, :] < mem[None, :, :]).any(axis=2)
            mem_dominated = (le & lt).any(axis=0)
        le = (cand[:, None, :] <= cand[None, :, :]).all(axis=2)
        lt = (cand[:, None, :] < cand[None, :, :]).any(axis=2)
        cand_dominated |= (le & lt).any(axis=0)
        self._entries = [e for e, gone in zip(self._entries, mem_dominated) if not gone]
        self._entries.extend(e for e, gone in zip(fresh, cand_dominated) if not gone)
        self._values = self._entry_values(self._entries)

    def best(self, objective_index: int) -> float:
        """Smallest archived value of one objective (by full-vector index)."""
        if not self._entries:
            raise ValueError("archive is empty")
        return min(e.objectives.as_tuple()[objective_index] for e in self._entries)


def merge_archives(archives) -> ParetoArchive:
    """Non-dominated union of archives sharing one objective mask."""
    archives = list(archives)
    if not archives:
        raise ValueError("need at least one archive to merge")
    mask = archives[0].objective_mask
    if any(a.objective_mask != mask for a in archives):
        raise ValueError("archives select different objectives; refusing to merge")
    merged = ParetoArchive(mask)
    for archive in archives:
        merged.absorb(archive.members)
    return merged


@dataclass(frozen=True)
class EvolutionConfig:
    population_size: int = 100
    generations: int = 400
    n_hidden: int = 20
    constrained: bool = False
    spike_objective: bool = True
    p_mut: float = 0.3
    tournament: bool = False
    seed: int = 0
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.generations < 0:
            raise ValueError("generations must be nonnegative")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")

    def objective_mask(self) -> tuple[bool, bool, bool, bool]:
        return (True, True, True, self.spike_objective)


def _evaluate_task(task) -> ObjectiveVector:
    genome, envs, seeds = task
    return evaluate(genome, envs, seeds)


class _Evaluator:
    """Maps evaluation tasks either inline or over a worker pool.

    Results come back in task order either way, so the parallelism degree
    cannot change any downstream decision.
    """

    def __init__(self, jobs: int):
        self._jobs = jobs
        self._pool = None
        if jobs > 1:
            self._pool = get_context("fork").Pool(processes=jobs)

    def map(self, tasks) -> list[ObjectiveVector]:
        if self._pool is None:
            return [_evaluate_task(t) for t in tasks]
        chunk = max(1, len(tasks) // (4 * self._jobs))
        return self._pool.map(_evaluate_task, tasks, chunksize=chunk)

    def close(self) -> None:
        if self._pool is not None:
            self._pool.close()
            self._pool.join()
            self._pool = None


def _generation_context(seed: int, generation: int):
    """The four shared (env, episode seed) pairs for one generation."""
    env_rng = derived_rng(seed, _DOMAIN_ENVS, generation)
    envs = [sample_env_params(env_rng) for _ in H0_SCHEDULE]
    seeds = [(seed, _DOMAIN_EPISODE, generation, j) for j in range(len(H0_SCHEDULE))]
    return envs, seeds


def _evaluate_all(individuals, generation: int, config: EvolutionConfig,
                  evaluator: _Evaluator) -> None:
    envs, seeds = _generation_context(config.seed, generation)
    tasks = [(ind.genome, envs, seeds) for ind in individuals]
    for ind, objectives in zip(individuals, evaluator.map(tasks)):
        ind.objectives = objectives


def _records(individuals, generation: int, seed: int) -> list[ArchiveEntry]:
    return [
        ArchiveEntry(
            genome=ind.genome,
            objectives=ind.objectives,
            individual_id=ind.id,
            generation=generation,
            lineage=ind.lineage,
            seed=seed,
        )
        for ind in individuals
    ]


def _pick_parent(population, rng: np.random.Generator, tournament: bool) -> Individual:
    if not tournament:
        return population[int(rng.integers(0, len(population)))]
    a = population[int(rng.integers(0, len(population)))]
    b = population[int(rng.integers(0, len(population)))]
    ka = (a.rank if a.rank is not None else 0, -(a.crowding if a.crowding is not None else 0.0))
    kb = (b.rank if b.rank is not None else 0, -(b.crowding if b.crowding is not None else 0.0))
    return a if ka <= kb else b


def _generation_stats(generation: int, evaluated, archive: ParetoArchive) -> dict:
    values = np.asarray([ind.objectives.as_tuple() for ind in evaluated], dtype=float)
    row = {
        "generation": generation,
        "evaluations": len(evaluated),
        "archive_size": len(archive),
    }
    for k, name in enumerate(OBJECTIVE_NAMES):
        row[f"best_{name}"] = float(values[:, k].min())
        row[f"median_{name}"] = float(np.median(values[:, k]))
    return row


def evolve_generation(population, archive: ParetoArchive, generation: int,
                      config: EvolutionConfig, evaluator: _Evaluator | None = None,
                      next_id: int | None = None):
    """One reproduce/evaluate/select cycle; returns (survivors, stats, next_id).

    The parent population must already be evaluated and rank-annotated.
    Parents are re-evaluated alongside offspring on this generation's
    environments, the archive absorbs the whole pool, and rank/crowding
    truncation keeps the population size constant.
    """
    own_evaluator = evaluator is None
    if own_evaluator:
        evaluator = _Evaluator(config.jobs)
    if next_id is None:
        next_id = max(ind.id for ind in population) + 1
    try:
        rng = derived_rng(config.seed, _DOMAIN_REPRO, generation)
        mutation = MutationConfig(config.p_mut, config.constrained)
        offspring = []
        for _ in range(len(population)):
            parent = _pick_parent(population, rng, config.tournament)
            offspring.append(Individual(
                genome=mutate(parent.genome, mutation, rng),
                id=next_id,
                lineage=parent.id,
            ))
            next_id += 1
        pool = list(population) + offspring
        _evaluate_all(pool, generation, config, evaluator)
        archive.absorb(_records(pool, generation, config.seed))
        survivors = select_survivors(pool, len(population), config.objective_mask())
        stats = _generation_stats(generation, pool, archive)
        return survivors, stats, next_id
    finally:
        if own_evaluator:
            evaluator.close()


def run_evolution(config: EvolutionConfig, progress=None) -> tuple[ParetoArchive, list[dict]]:
    """Run a full evolution; returns the archive and per-generation stats.

    Fully determined by ``config`` (the parallelism degree changes nothing
    but wall time). ``progress``, if given, is called with each stats row.
    """
    archive = ParetoArchive(config.objective_mask())
    population = init_population(
        config.population_size, config.n_hidden, derived_rng(config.seed, _DOMAIN_INIT)
    )
    evaluator = _Evaluator(config.jobs)
    try:
        _evaluate_all(population, 0, config, evaluator)
        archive.absorb(_records(population, 0, config.seed))
        # no-op truncation: annotates rank/crowding for parent selection
        population = select_survivors(population, config.population_size,
                                      config.objective_mask())
        stats = [_generation_stats(0, population, archive)]
        if progress is not None:
            progress(stats[0])
        next_id = config.population_size
        for generation in range(1, config.generations + 1):
            population, row, next_id = evolve_generation(
                population, archive, generation, config, evaluator, next_id
            )
            stats.append(row)
            if progress is not None:
                progress(row)
    finally:
        evaluator.close()
    return archive, stats
