"""Mapping of allocation slots onto a topology's processing vertices (SP3).

The genome is a permutation: position = processing vertex (ascending id),
value = included slot (ascending slot index).  A short GA with ordered
crossover and scramble mutation maximizes the evaluation reward.  The
budget is tiny because SP3 runs inside every search epoch, so the initial
population carries one constructed seed: slots grouped by part are laid
onto segments of matching size, highest-traffic slots onto best-connected
vertices, which is usually enough to clear the segmentation gate when the
topology allows it at all.
"""

from __future__ import annotations

import numpy as np

from .allocation import AllocationSolution
from .config import RunConfig
from .errors import InputError
from .evaluation import EvaluationReport, ModuleMapping, TopologyEvaluator, _failed_report
from .model import ApplicationModel, ModuleCatalog
from .topology import TopologyGraph


def ordered_crossover(a: np.ndarray, b: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Keep a random slice of a, fill the rest with b's genes in b's order."""
    n = a.shape[0]
    if n < 2:
        return a.copy()
    i, j = np.sort(rng.integers(0, n + 1, size=2))
    child = np.full(n, -1, dtype=np.int64)
    child[i:j] = a[i:j]
    kept = set(a[i:j].tolist())
    fill = [g for g in b.tolist() if g not in kept]
    holes = [k for k in range(n) if not (i <= k < j)]
    for k, g in zip(holes, fill):
        child[k] = g
    return child


def scramble_mutation(genome: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Shuffle one random index interval in place of the original order."""
    n = genome.shape[0]
    out = genome.copy()
    if n < 2:
        return out
    i, j = np.sort(rng.integers(0, n, size=2))
    j += 1
    out[i:j] = out[i:j][rng.permutation(j - i)]
    return out


def _greedy_seed(ev: TopologyEvaluator) -> np.ndarray:
    """Part-aware constructed genome.

    Matches part slot-groups to equally sized segments (largest first) and
    within each group puts the chattiest slots on the highest-degree
    vertices.  Falls back to traffic-by-degree over everything when the
    segment sizes cannot host the parts one-to-one.
    """
    P = ev.P
    talk = ev.traffic.sum(axis=0) + ev.traffic.sum(axis=1)  # per slot ordinal
    degree = np.asarray([ev.topology.degree(v) for v in ev.proc_vids], dtype=np.float64)

    by_part: dict[int, list[int]] = {}
    for k in range(P):
        by_part.setdefault(int(ev.part_of_slot[k]), []).append(k)
    by_seg: dict[int, list[int]] = {}
    for i in range(P):
        by_seg.setdefault(int(ev.seg_of[i]), []).append(i)

    genome = np.full(P, -1, dtype=np.int64)
    part_sizes = sorted(((len(v), p) for p, v in by_part.items()), reverse=True)
    seg_sizes = sorted(((len(v), s) for s, v in by_seg.items()), reverse=True)
    matchable = (
        len(part_sizes) <= len(seg_sizes)
        and all(ps == ss for (ps, _), (ss, _) in zip(part_sizes, seg_sizes))
    )
    if matchable:
        for (_, part), (_, seg) in zip(part_sizes, seg_sizes):
            slots = sorted(by_part[part], key=lambda k: -talk[k])
            verts = sorted(by_seg[seg], key=lambda i: -degree[i])
            for i, k in zip(verts, slots):
                genome[i] = k
        leftovers = [k for s, verts in by_seg.items()
                     for k in verts if genome[k] == -1]
        spare = [k for k in range(P) if k not in set(genome.tolist())]
        for i, k in zip(leftovers, spare):
            genome[i] = k
        return genome
    order_v = np.argsort(-degree, kind="stable")
    order_s = np.argsort(-talk, kind="stable")
    genome[order_v] = order_s
    return genome


def solve_sp3(topology: TopologyGraph, allocation: AllocationSolution,
              model: ApplicationModel, config: RunConfig, catalog: ModuleCatalog,
              seed: int | None = None,
              evaluator: TopologyEvaluator | None = None,
              ) -> tuple[ModuleMapping, EvaluationReport]:
    """Best mapping found by the permutation GA, with its full report.

    A topology whose processing vertices cannot host the allocation (size
    or type-count mismatch) gets an immediate gate-failed report.
    """
    config.validate()
    if seed is None:
        seed = config.rng_seed
    ev = evaluator or TopologyEvaluator(topology, allocation, model, config, catalog)
    if not (ev.size_ok and ev.counts_ok):
        return ModuleMapping({}), _failed_report(ev.cost_units, ev.n_segments)
    cfg = config.sp3
    rng = np.random.default_rng(seed)
    P = ev.P

    pop = np.stack(
        [_greedy_seed(ev)]
        + [rng.permutation(P) for _ in range(cfg.population_size - 1)]
    ).astype(np.int64)
    rewards = ev.batch_rewards(pop)

    best_idx = int(np.argmax(rewards))
    best_genome = pop[best_idx].copy()
    best_reward = float(rewards[best_idx])

    n_children = cfg.population_size - cfg.elite_count
    for _ in range(cfg.max_generations):
        if n_children <= 0:
            break
        elite_order = np.argsort(-rewards, kind="stable")[: cfg.elite_count]
        children = []
        for _ in range(n_children):
            pa = _pick(rewards, cfg.tournament_size, rng)
            pb = _pick(rewards, cfg.tournament_size, rng)
            child = ordered_crossover(pop[pa], pop[pb], rng)
            if rng.random() < cfg.mutation_rate:
                child = scramble_mutation(child, rng)
            children.append(child)
        pop = np.concatenate([pop[elite_order], np.stack(children)])
        rewards = ev.batch_rewards(pop)
        gen_best = int(np.argmax(rewards))
        if rewards[gen_best] > best_reward:
            best_reward = float(rewards[gen_best])
            best_genome = pop[gen_best].copy()

    mapping = ev.mapping_of(best_genome)
    return mapping, ev.report(best_genome)


def _pick(rewards: np.ndarray, k: int, rng: np.random.Generator) -> int:
    entrants = rng.integers(0, rewards.shape[0], size=k)
    return int(entrants[np.argmax(rewards[entrants])])
