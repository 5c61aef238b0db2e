"""Monte-Carlo tree search over rule-application sequences (SP2).

Each epoch walks the tree by UCT, expands one untried action, plays random
actions until the graph is terminal (it has exactly the processing modules
the allocation asks for and they can all reach each other), runs the
mapping GA on that terminal, and backpropagates the resulting reward.
Rollouts that hit the depth cap or a dead end count as reward 0.

Every evaluated terminal becomes a comparison candidate; only the best
one's full topology and mapping are retained.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import log, sqrt

import numpy as np

from .allocation import AllocationSolution
from .config import RunConfig
from .errors import InputError
from .evaluation import EvaluationReport, ModuleMapping
from .grammar import Grammar
from .mapping import solve_sp3
from .model import (
    KIND_GATEWAY,
    KIND_PROCESSING,
    KIND_SWITCH,
    ApplicationModel,
    ModuleCatalog,
)
from .topology import (
    ActionSpace,
    TopologyGraph,
    apply_action,
    processing_counts,
    processing_mutually_reachable,
    structural_stats,
)


def worker_count(requested: int) -> int:
    """Worker cap: the smaller of the request and the NETGAP_THREADS budget."""
    env = os.environ.get("NETGAP_THREADS", "").strip()
    if env:
        try:
            budget = int(env)
        except ValueError:
            raise InputError(f"NETGAP_THREADS must be an integer, got {env!r}") from None
        if budget < 1:
            raise InputError("NETGAP_THREADS must be at least 1")
    else:
        budget = os.cpu_count() or 1
    return max(1, min(requested, budget))


def is_terminal(g: TopologyGraph, allocation: AllocationSolution,
                catalog: ModuleCatalog) -> bool:
    """Terminal: required processing modules present and mutually reachable."""
    return (
        processing_counts(g, catalog) == allocation.required_type_counts
        and processing_mutually_reachable(g, catalog)
    )


class SearchNode:
    __slots__ = ("graph", "action_from_parent", "parent", "children", "untried",
                 "visits", "total_reward", "terminal")

    def __init__(self, graph, action_from_parent, parent, terminal):
        self.graph = graph
        self.action_from_parent = action_from_parent
        self.parent = parent
        self.children: list[SearchNode] = []
        self.untried = None  # filled on first descent; None = not enumerated yet
        self.visits = 0
        self.total_reward = 0.0
        self.terminal = terminal

    @property
    def mean_reward(self) -> float:
        return self.total_reward / self.visits if self.visits else 0.0


def uct_select(node: SearchNode, c: float) -> SearchNode:
    """Child maximizing W/N + c*sqrt(ln N_parent / N); ties pick the lowest index.

    Callers expand untried actions before ever re-selecting a child, so
    every child here has at least one visit.
    """
    if not node.children:
        raise InputError("uct_select on a node with no children")
    parent_visits = max(node.visits, 1)
    best, best_value = None, float("-inf")
    for child in node.children:
        n = max(child.visits, 1)
        value = child.total_reward / n + c * sqrt(log(parent_visits) / n)
        if value > best_value:
            best, best_value = child, value
    return best


def rollout(start: TopologyGraph, grammar: Grammar, allocation: AllocationSolution,
            catalog: ModuleCatalog, depth_cap: int,
            rng: np.random.Generator) -> TopologyGraph | None:
    """Uniformly random rule applications until terminal; None on failure."""
    g = start
    for _ in range(depth_cap + 1):
        if is_terminal(g, allocation, catalog):
            return g
        space = ActionSpace(g, grammar)
        if space.total == 0:
            return None
        g = apply_action(g, grammar, space.sample(rng))
    return None


@dataclass(frozen=True)
class CandidateRow:
    """Scalar record of one evaluated terminal, one line of the comparison table."""

    candidate: int
    epoch: int
    feasible: bool
    reward: float
    latency_score: float
    cost_score: float
    dp_score: float
    mean_disjoint_paths: float
    mean_hops: float
    max_link_load: float
    max_node_load: float
    overloaded_links: int
    processing_modules: int
    switches: int
    gateways: int
    links: int
    segments: int
    cost_units: float

    @classmethod
    def from_report(cls, candidate: int, epoch: int, report: EvaluationReport,
                    g: TopologyGraph, catalog: ModuleCatalog) -> "CandidateRow":
        stats = structural_stats(g, catalog)
        return cls(
            candidate=candidate,
            epoch=epoch,
            feasible=report.gates_passed,
            reward=report.reward,
            latency_score=report.latency_score,
            cost_score=report.cost_score,
            dp_score=report.dp_score,
            mean_disjoint_paths=report.mean_disjoint_paths,
            mean_hops=report.mean_hops,
            max_link_load=report.max_link_load,
            max_node_load=report.max_node_load,
            overloaded_links=report.overloaded_links,
            processing_modules=stats.kind_counts.get(KIND_PROCESSING, 0),
            switches=stats.kind_counts.get(KIND_SWITCH, 0),
            gateways=stats.kind_counts.get(KIND_GATEWAY, 0),
            links=stats.n_links,
            segments=stats.n_segments,
            cost_units=report.cost_units,
        )


@dataclass
class SearchResult:
    best_topology: TopologyGraph | None
    best_mapping: ModuleMapping | None
    best_report: EvaluationReport | None
    candidates: list = field(default_factory=list)  # CandidateRow, discovery order
    epochs: int = 0
    terminals_evaluated: int = 0

    @property
    def feasible(self) -> bool:
        return self.best_report is not None and self.best_report.gates_passed

    def summary_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "epochs": self.epochs,
            "terminals_evaluated": self.terminals_evaluated,
            "candidates": len(self.candidates),
            "best_reward": self.best_report.reward if self.best_report else None,
        }


class _Search:
    def __init__(self, grammar, allocation, model, config, catalog, seed, start_graph):
        config.validate()
        self.grammar = grammar
        self.allocation = allocation
        self.model = model
        self.config = config
        self.catalog = catalog
        self.rng = np.random.default_rng(config.rng_seed if seed is None else seed)
        start = start_graph if start_graph is not None else TopologyGraph.empty()
        self.root = SearchNode(start, None, None,
                               is_terminal(start, allocation, catalog))
        cap = config.sp2.rollout_depth_cap
        if cap is None:
            cap = max(16, 8 * allocation.n_included)
        self.depth_cap = cap
        self.result = SearchResult(None, None, None)
        self.best_reward = float("-inf")

    def _ensure_untried(self, node: SearchNode) -> None:
        if node.untried is None:
            space = ActionSpace(node.graph, self.grammar)
            node.untried = space.sample_capped(self.rng, self.config.sp2.max_untried_actions)

    def _descend(self) -> tuple[SearchNode, list[SearchNode]]:
        """Walk to a rollout start: a terminal, a fresh child, or a dead end."""
        node = self.root
        path = [node]
        while not node.terminal:
            self._ensure_untried(node)
            if node.untried:
                action = node.untried.pop(0)
                child_graph = apply_action(node.graph, self.grammar, action)
                child = SearchNode(child_graph, action, node,
                                   is_terminal(child_graph, self.allocation, self.catalog))
                node.children.append(child)
                path.append(child)
                return child, path
            if not node.children:
                return node, path  # dead end; rollout will fail, reward 0
            node = uct_select(node, self.config.sp2.uct_c)
            path.append(node)
        return node, path

    def _simulate(self, node: SearchNode, rollout_seed, sp3_seed):
        """Rollout plus mapping GA; pure, safe off-thread."""
        rng = np.random.default_rng(rollout_seed)
        terminal = node.graph if node.terminal else rollout(
            node.graph, self.grammar, self.allocation, self.catalog,
            self.depth_cap, rng,
        )
        if terminal is None:
            return None, None, None
        mapping, report = solve_sp3(terminal, self.allocation, self.model,
                                    self.config, self.catalog, seed=sp3_seed)
        return terminal, mapping, report

    def _record(self, epoch, terminal, mapping, report) -> float:
        if terminal is None:
            return 0.0
        self.result.terminals_evaluated += 1
        row = CandidateRow.from_report(len(self.result.candidates), epoch, report,
                                       terminal, self.catalog)
        self.result.candidates.append(row)
        if report.reward > self.best_reward or self.result.best_report is None:
            self.best_reward = report.reward
            self.result.best_topology = terminal
            self.result.best_mapping = mapping
            self.result.best_report = report
        return report.reward

    @staticmethod
    def _backpropagate(path: list[SearchNode], reward: float) -> None:
        for node in path:
            node.visits += 1
            node.total_reward += reward

    def run(self, on_progress=None) -> SearchResult:
        sp2 = self.config.sp2
        epoch = 0
        workers = worker_count(sp2.parallel_rollouts)
        pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
        try:
            while epoch < sp2.max_epochs:
                wave = min(workers, sp2.max_epochs - epoch) if pool else 1
                picks = []
                for _ in range(wave):
                    node, path = self._descend()
                    for n in path:  # virtual loss so the wave spreads out
                        n.visits += 1
                    seeds = self.rng.integers(0, 2**63, size=2)
                    picks.append((node, path, int(seeds[0]), int(seeds[1])))
                if pool:
                    outcomes = list(pool.map(
                        lambda p: self._simulate(p[0], p[2], p[3]), picks))
                else:
                    node, path, rs, ms = picks[0]
                    outcomes = [self._simulate(node, rs, ms)]
                for (node, path, _, _), (terminal, mapping, report) in zip(picks, outcomes):
                    for n in path:
                        n.visits -= 1
                    reward = self._record(epoch, terminal, mapping, report)
                    self._backpropagate(path, reward)
                    epoch += 1
                    self.result.epochs = epoch
                    if on_progress and (epoch % sp2.log_every == 0 or epoch == sp2.max_epochs):
                        on_progress({
                            "epoch": epoch,
                            "best_reward": (self.result.best_report.reward
                                            if self.result.best_report else None),
                            "candidates": len(self.result.candidates),
                            "feasible": self.result.feasible,
                        })
        finally:
            if pool:
                pool.shutdown(wait=False)
        return self.result


def search(grammar: Grammar, allocation: AllocationSolution, model: ApplicationModel,
           config: RunConfig, catalog: ModuleCatalog, seed: int | None = None,
           start_graph: TopologyGraph | None = None,
           on_progress=None) -> SearchResult:
    """Run the full SP2 loop and return the best candidate found.

    A result with no gate-passing candidate has feasible=False; the caller
    decides how loudly to complain.  Deterministic for a fixed seed when
    parallel_rollouts is 1.
    """
    return _Search(grammar, allocation, model, config, catalog, seed, start_graph).run(on_progress)
