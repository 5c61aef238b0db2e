"""Rule-sequence search: UCT selection, rollouts, and the epoch loop."""

import math

import numpy as np
import pytest

from conftest import manual_allocation, two_segment_world
from netgap import InputError, RunConfig, TopologyGraph, parse_grammar
from netgap.model import ApplicationModel, Process
from netgap.search import (
    CandidateRow,
    SearchNode,
    is_terminal,
    rollout,
    search,
    uct_select,
    worker_count,
)

ONE_SHOT = parse_grammar("r0: phi => S <-> M;")
SWITCH_ONLY = parse_grammar("r0: phi => S;")
NEVER_MATCHES = parse_grammar("r0: A => B;")


def one_module_setup():
    model = ApplicationModel([Process("p0", "APP", 10.0, 0.5)], [])
    allocation = manual_allocation(model, {"p0": 0}, 1)
    config = RunConfig()
    config.required_segments = 1
    return model, allocation, config


# ---------------------------------------------------------------------------
# Worker budget
# ---------------------------------------------------------------------------

class TestWorkerCount:
    def test_env_budget_caps_the_request(self, monkeypatch):
        monkeypatch.setenv("NETGAP_THREADS", "2")
        assert worker_count(8) == 2
        assert worker_count(1) == 1

    def test_defaults_to_machine_size(self, monkeypatch):
        monkeypatch.delenv("NETGAP_THREADS", raising=False)
        import os
        assert worker_count(10**6) == (os.cpu_count() or 1)
        assert worker_count(1) == 1

    @pytest.mark.parametrize("value", ["abc", "1.5", "0", "-3"])
    def test_bad_budget_rejected(self, monkeypatch, value):
        monkeypatch.setenv("NETGAP_THREADS", value)
        with pytest.raises(InputError):
            worker_count(4)


# ---------------------------------------------------------------------------
# Terminal predicate
# ---------------------------------------------------------------------------

class TestIsTerminal:
    def test_complete_reachable_topology_is_terminal(self, catalog):
        _, allocation, g, _, _ = two_segment_world()
        assert is_terminal(g, allocation, catalog)

    def test_isolated_module_blocks_termination(self, catalog):
        _, allocation, _, _, _ = two_segment_world()
        g = TopologyGraph.empty()
        g, va = g.with_vertex("M")
        g, vb = g.with_vertex("M")
        g, vc = g.with_vertex("M")  # never wired up
        g, sa = g.with_vertex("S")
        g = g.with_bidi_edge(va, sa).with_bidi_edge(vb, sa)
        assert not is_terminal(g, allocation, catalog)

    def test_surplus_module_blocks_termination(self, catalog):
        _, allocation, g, _, _ = two_segment_world()
        g, _ = g.with_vertex("M")
        assert not is_terminal(g, allocation, catalog)

    def test_empty_graph_is_not_terminal(self, catalog):
        _, allocation, _, _, _ = two_segment_world()
        assert not is_terminal(TopologyGraph.empty(), allocation, catalog)


# ---------------------------------------------------------------------------
# UCT selection
# ---------------------------------------------------------------------------

def _node(visits: int, total: float) -> SearchNode:
    n = SearchNode(TopologyGraph.empty(), None, None, False)
    n.visits = visits
    n.total_reward = total
    return n


class TestUctSelect:
    def test_hand_worked_example(self):
        root = _node(3, 0.0)
        seen_twice = _node(2, 1.0)
        seen_once = _node(1, 0.5)
        root.children = [seen_twice, seen_once]
        # 0.5 + 2.8 sqrt(ln3 / 2) = 2.576 against 0.5 + 2.8 sqrt(ln3) = 3.435
        assert uct_select(root, 2.8) is seen_once
        v1 = 0.5 + 2.8 * math.sqrt(math.log(3) / 2)
        v2 = 0.5 + 2.8 * math.sqrt(math.log(3) / 1)
        assert v1 == pytest.approx(2.575, abs=1e-3)
        assert v2 == pytest.approx(3.435, abs=1e-3)

    def test_zero_exploration_is_pure_exploitation(self):
        root = _node(10, 0.0)
        low = _node(5, 1.0)
        high = _node(2, 1.5)
        root.children = [low, high]
        assert uct_select(root, 0.0) is high

    def test_exact_ties_pick_the_first_child(self):
        root = _node(4, 0.0)
        first = _node(2, 1.0)
        second = _node(2, 1.0)
        root.children = [first, second]
        assert uct_select(root, 2.8) is first

    def test_childless_node_rejected(self):
        with pytest.raises(InputError):
            uct_select(_node(1, 0.0), 2.8)

    def test_matches_a_recomputed_oracle_on_random_trees(self):
        rng = np.random.default_rng(77)
        for _ in range(200):
            root = _node(0, 0.0)
            k = int(rng.integers(1, 9))
            for _ in range(k):
                root.children.append(
                    _node(int(rng.integers(1, 50)), float(rng.uniform(0, 40))))
            root.visits = sum(c.visits for c in root.children)
            c = float(rng.uniform(0.0, 4.0))
            scores = [
                ch.total_reward / ch.visits
                + c * math.sqrt(math.log(max(root.visits, 1)) / ch.visits)
                for ch in root.children
            ]
            assert uct_select(root, c) is root.children[int(np.argmax(scores))]


# ---------------------------------------------------------------------------
# Rollouts
# ---------------------------------------------------------------------------

class TestRollout:
    def test_terminal_start_returns_immediately(self, catalog, segmented_grammar):
        _, allocation, g, _, _ = two_segment_world()
        out = rollout(g, segmented_grammar, allocation, catalog, 10,
                      np.random.default_rng(0))
        assert out is g

    def test_single_rule_reaches_the_one_module_goal(self, catalog):
        _, allocation, _ = one_module_setup()
        out = rollout(TopologyGraph.empty(), ONE_SHOT, allocation, catalog, 1,
                      np.random.default_rng(0))
        assert out is not None
        assert out.label_counts() == {"M": 1, "S": 1}

    def test_zero_depth_budget_fails(self, catalog):
        _, allocation, _ = one_module_setup()
        assert rollout(TopologyGraph.empty(), ONE_SHOT, allocation, catalog, 0,
                       np.random.default_rng(0)) is None

    def test_dead_end_graph_fails(self, catalog):
        _, allocation, _ = one_module_setup()
        assert rollout(TopologyGraph.empty(), NEVER_MATCHES, allocation, catalog, 50,
                       np.random.default_rng(0)) is None

    def test_goal_never_reachable_fails(self, catalog):
        _, allocation, _ = one_module_setup()
        assert rollout(TopologyGraph.empty(), SWITCH_ONLY, allocation, catalog, 6,
                       np.random.default_rng(3)) is None


# ---------------------------------------------------------------------------
# Full search loop
# ---------------------------------------------------------------------------

class TestSearch:
    def test_single_epoch_finds_the_one_step_terminal(self, catalog):
        model, allocation, config = one_module_setup()
        config.sp2.max_epochs = 1
        result = search(ONE_SHOT, allocation, model, config, catalog, seed=1)
        assert result.epochs == 1
        assert result.terminals_evaluated == 1
        assert len(result.candidates) == 1
        assert result.feasible
        row = result.candidates[0]
        assert row.candidate == 0 and row.epoch == 0
        assert row.processing_modules == 1 and row.switches == 1
        assert result.best_topology.label_counts() == {"M": 1, "S": 1}

    def test_unreachable_goal_leaves_no_candidates(self, catalog):
        model, allocation, config = one_module_setup()
        config.sp2.max_epochs = 8
        config.sp2.rollout_depth_cap = 3
        result = search(SWITCH_ONLY, allocation, model, config, catalog, seed=1)
        assert result.epochs == 8
        assert result.terminals_evaluated == 0
        assert result.candidates == []
        assert not result.feasible
        assert result.best_topology is None
        assert result.summary_dict()["best_reward"] is None

    def test_best_report_tracks_the_maximum_candidate(self, catalog, segmented_grammar):
        model, allocation, _, _, _ = two_segment_world()
        config = RunConfig()
        config.sp2.max_epochs = 60
        result = search(segmented_grammar, allocation, model, config, catalog, seed=4)
        assert result.epochs == 60
        if result.candidates:
            best = max(row.reward for row in result.candidates)
            assert result.best_report.reward == pytest.approx(best)
            assert [row.candidate for row in result.candidates] \
                == list(range(len(result.candidates)))

    def test_same_seed_reproduces_every_candidate(self, catalog, segmented_grammar):
        model, allocation, _, _, _ = two_segment_world()
        config = RunConfig()
        config.sp2.max_epochs = 40
        a = search(segmented_grammar, allocation, model, config, catalog, seed=11)
        b = search(segmented_grammar, allocation, model, config, catalog, seed=11)
        assert a.candidates == b.candidates
        assert a.summary_dict() == b.summary_dict()

    def test_terminal_start_graph_is_scored_each_epoch(self, catalog, segmented_grammar):
        model, allocation, g, _, _ = two_segment_world()
        config = RunConfig()
        config.sp2.max_epochs = 3
        result = search(segmented_grammar, allocation, model, config, catalog,
                        seed=2, start_graph=g)
        assert result.terminals_evaluated == 3
        assert result.feasible
        assert result.best_topology.to_dict() == g.to_dict()
        assert result.best_report.reward == pytest.approx((1.0 + 30.0 / 70.7 + 1.0) / 3.0)
        for row in result.candidates:
            assert row.reward == pytest.approx((1.0 + 30.0 / 70.7 + 1.0) / 3.0)

    def test_progress_callback_fires_on_schedule(self, catalog):
        model, allocation, config = one_module_setup()
        config.sp2.max_epochs = 5
        config.sp2.log_every = 2
        seen = []
        search(ONE_SHOT, allocation, model, config, catalog, seed=1,
               on_progress=seen.append)
        assert [p["epoch"] for p in seen] == [2, 4, 5]
        assert all({"epoch", "best_reward", "candidates", "feasible"} <= set(p)
                   for p in seen)

    def test_parallel_rollouts_still_complete(self, catalog, monkeypatch):
        monkeypatch.setenv("NETGAP_THREADS", "2")
        model, allocation, config = one_module_setup()
        config.sp2.max_epochs = 6
        config.sp2.parallel_rollouts = 4
        result = search(ONE_SHOT, allocation, model, config, catalog, seed=1)
        assert result.epochs == 6
        assert result.feasible

    def test_invalid_config_rejected(self, catalog):
        model, allocation, config = one_module_setup()
        config.sp2.max_epochs = 0
        with pytest.raises(InputError):
            search(ONE_SHOT, allocation, model, config, catalog, seed=1)


class TestCandidateRow:
    def test_row_mirrors_report_and_structure(self, catalog):
        from netgap.evaluation import evaluate
        model, allocation, g, mapping, _ = two_segment_world()
        report = evaluate(g, allocation, mapping, model, RunConfig(), catalog)
        row = CandidateRow.from_report(4, 17, report, g, catalog)
        assert row.candidate == 4 and row.epoch == 17
        assert row.feasible and row.reward == pytest.approx(report.reward)
        assert row.processing_modules == 3
        assert row.switches == 2 and row.gateways == 2
        assert row.links == 7 and row.segments == 2
        assert row.cost_units == pytest.approx(70.7)
