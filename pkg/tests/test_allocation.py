"""Process-to-module allocation: feasibility accounting and the two-phase GA."""

import itertools

import numpy as np
import pytest

from netgap import (
    InfeasibleModelError,
    InputError,
    RunConfig,
    check_feasibility,
    load_allocation,
    save_allocation,
    solve_sp1,
)
from netgap.allocation import AllocationGenome, fitness
from netgap.model import ApplicationModel, Message, Process


def model_of(demands, messages=(), parts=None):
    """Processes p0..pN with given Mops demands plus (src, dst, mbps) messages."""
    procs = [
        Process(f"p{i}", (parts or {}).get(i, "APP"), period_ms=10.0, compute_mops=d)
        for i, d in enumerate(demands)
    ]
    msgs = [
        Message(f"m{k}", f"p{s}", f"p{d}", size_bits=mbps * 10_000.0, period_ms=10.0)
        for k, (s, d, mbps) in enumerate(messages)
    ]
    return ApplicationModel(procs, msgs)


def genome_on_one_slot(n_processes, n_slots=1):
    inclusion = np.zeros(n_slots, dtype=bool)
    inclusion[0] = True
    return AllocationGenome(inclusion, np.zeros(n_processes, dtype=np.int64))


def small_config(slots, pop=60, gens=40):
    cfg = RunConfig()
    cfg.sp1.candidate_module_slots = slots
    cfg.sp1.population_size = pop
    cfg.sp1.max_generations = gens
    return cfg


def test_colocated_messages_use_no_interface_bandwidth(catalog):
    model = model_of([1.0, 1.0], [(0, 1, 60.0), (1, 0, 60.0)])
    result = check_feasibility(genome_on_one_slot(2), model, catalog)
    assert result.feasible
    assert result.violations == ()


def test_split_processes_load_both_interfaces(catalog):
    model = model_of([1.0, 1.0], [(0, 1, 60.0), (1, 0, 60.0)])
    genome = AllocationGenome(np.array([True, True]), np.array([0, 1]))
    result = check_feasibility(genome, model, catalog)
    assert result.feasible  # 60 out + 60 in per module, under 100 each way


def test_interface_overflow_measured_per_direction(catalog):
    model = model_of([0.1, 0.1], [(0, 1, 130.0)])
    genome = AllocationGenome(np.array([True, True]), np.array([0, 1]))
    result = check_feasibility(genome, model, catalog)
    assert not result.feasible
    kinds = {v.kind: v for v in result.violations}
    assert kinds["bandwidth_out"].slot == 0
    assert kinds["bandwidth_out"].magnitude == pytest.approx(30.0)
    assert kinds["bandwidth_in"].slot == 1
    assert kinds["bandwidth_in"].magnitude == pytest.approx(30.0)


def test_compute_overflow_is_demand_minus_capacity(catalog):
    # 2.7 Mops capacity: two unit processes fit, each extra one adds 1.0
    assert check_feasibility(genome_on_one_slot(2), model_of([1.0] * 2), catalog).feasible
    three = check_feasibility(genome_on_one_slot(3), model_of([1.0] * 3), catalog)
    (violation,) = three.violations
    assert violation.kind == "compute"
    assert violation.magnitude == pytest.approx(0.3)
    four = check_feasibility(genome_on_one_slot(4), model_of([1.0] * 4), catalog)
    (violation,) = four.violations
    assert violation.magnitude == pytest.approx(1.3)


def test_assignment_to_excluded_slot_is_flagged(catalog):
    genome = AllocationGenome(np.array([True, False]), np.array([0, 1]))
    result = check_feasibility(genome, model_of([0.5, 0.5]), catalog)
    assert any(v.kind == "excluded_slot" and v.slot == 1 for v in result.violations)


def test_mixed_parts_on_one_slot_are_flagged(catalog):
    model = model_of([0.5, 0.5], parts={0: "FCP", 1: "MOP"})
    result = check_feasibility(genome_on_one_slot(2), model, catalog)
    assert any(v.kind == "part_mixing" for v in result.violations)


def test_shape_mismatch_is_an_input_error(catalog):
    with pytest.raises(InputError):
        check_feasibility(genome_on_one_slot(3), model_of([1.0] * 4), catalog)
    genome = AllocationGenome(np.array([True]), np.array([2]))
    with pytest.raises(InputError):
        check_feasibility(genome, model_of([1.0]), catalog)


# -- fitness -------------------------------------------------------------------


def test_primary_fitness_of_a_feasible_genome_is_module_cost(catalog):
    genome = AllocationGenome(np.array([True, True, False]),
                              np.array([0, 1, 0, 1]))
    score = fitness(genome, model_of([1.0] * 4), catalog, "primary")
    assert score == pytest.approx(20.0)


def test_penalty_scales_with_stated_lambda(catalog):
    model = model_of([1.0] * 4)
    genome = genome_on_one_slot(4)
    score = fitness(genome, model, catalog, "primary", penalty_weight=1000.0)
    assert score == pytest.approx(10.0 + 1000.0 * 1.3)


def test_balanced_assignment_has_zero_secondary_score(catalog):
    genome = AllocationGenome(np.array([True, True]), np.array([0, 0, 1, 1]))
    score = fitness(genome, model_of([1.0] * 4), catalog, "secondary")
    assert score == pytest.approx(0.0)


def test_unbalanced_assignment_scores_worse(catalog):
    model = model_of([1.0, 1.0, 0.4, 0.4])
    even = AllocationGenome(np.array([True, True]), np.array([0, 1, 0, 1]))
    skew = AllocationGenome(np.array([True, True]), np.array([0, 0, 1, 1]))
    assert fitness(even, model, catalog, "secondary") < fitness(skew, model, catalog, "secondary")


def test_unknown_phase_rejected(catalog):
    with pytest.raises(InputError):
        fitness(genome_on_one_slot(1), model_of([1.0]), catalog, "tertiary")


# -- the solver -----------------------------------------------------------------


def test_single_process_forces_a_single_module(catalog):
    solution = solve_sp1(model_of([1.0]), catalog, small_config(1), seed=1)
    assert solution.feasible
    assert solution.n_included == 1
    assert solution.module_cost(catalog) == pytest.approx(10.0)
    assert solution.process_assignment == {"p0": 0}


def brute_force_min_cost(model, catalog, n_slots, overload=0.8):
    """Cheapest feasible inclusion over every assignment, capacities tightened."""
    best = None
    m = len(model.processes)
    for assignment in itertools.product(range(n_slots), repeat=m):
        demand = {}
        for i, slot in enumerate(assignment):
            demand[slot] = demand.get(slot, 0.0) + model.processes[i].compute_mops
        cap = catalog.spec("M").compute_capacity_mops * overload
        if any(d > cap + 1e-12 for d in demand.values()):
            continue
        parts = {}
        for i, slot in enumerate(assignment):
            parts.setdefault(slot, set()).add(model.processes[i].part)
        if any(len(p) > 1 for p in parts.values()):
            continue
        bw_out = {}
        bw_in = {}
        for msg in model.messages:
            s = assignment[int(msg.src[1:])]
            d = assignment[int(msg.dst[1:])]
            if s == d:
                continue
            bw_out[s] = bw_out.get(s, 0.0) + msg.bandwidth_mbps
            bw_in[d] = bw_in.get(d, 0.0) + msg.bandwidth_mbps
        limit = catalog.spec("M").link_bandwidth_mbps * overload
        if any(v > limit + 1e-12 for v in bw_out.values()):
            continue
        if any(v > limit + 1e-12 for v in bw_in.values()):
            continue
        cost = len(demand) * catalog.spec("M").cost_units
        if best is None or cost < best:
            best = cost
    return best


def test_solver_matches_exhaustive_optimum_on_a_toy(catalog):
    rng = np.random.default_rng(11)
    model = model_of(rng.uniform(0.3, 1.2, size=6).round(2).tolist(),
                     [(0, 1, 5.0), (2, 3, 8.0), (4, 5, 3.0)])
    want = brute_force_min_cost(model, catalog, 3)
    solution = solve_sp1(model, catalog, small_config(3), seed=4)
    assert solution.feasible
    assert solution.module_cost(catalog) == pytest.approx(want)


def test_solutions_respect_tightened_capacities(catalog):
    model = model_of([0.9] * 8, [(0, 1, 20.0), (2, 3, 20.0)])
    cfg = small_config(6)
    solution = solve_sp1(model, catalog, cfg, seed=2)
    assert solution.feasible
    cap = catalog.spec("M").compute_capacity_mops
    for slot, mops in solution.compute_load.items():
        assert mops <= cap * cfg.overload_threshold + 1e-9


def test_parts_never_share_a_module(catalog):
    model = model_of([0.3] * 6, parts={i: ("FCP" if i < 4 else "MOP") for i in range(6)})
    solution = solve_sp1(model, catalog, small_config(4), seed=3)
    assert solution.feasible
    hosted = {}
    for pid, slot in solution.process_assignment.items():
        part = model.part_of(pid)
        assert hosted.setdefault(slot, part) == part


def test_per_part_runs_give_each_part_its_own_slots(catalog):
    model = model_of([0.3] * 6, parts={i: ("FCP" if i < 4 else "MOP") for i in range(6)})
    cfg = small_config(4)
    cfg.sp1.per_part_runs = True
    solution = solve_sp1(model, catalog, cfg, seed=3)
    assert solution.feasible
    hosted = {}
    for pid, slot in solution.process_assignment.items():
        hosted.setdefault(slot, set()).add(model.part_of(pid))
    assert all(len(parts) == 1 for parts in hosted.values())


def test_impossible_demand_raises_before_searching(catalog):
    model = model_of([2.8] * 4)  # single process exceeds one slot either way
    with pytest.raises(InfeasibleModelError):
        solve_sp1(model, catalog, small_config(2), seed=1)


def test_secondary_phase_keeps_the_primary_cost(catalog):
    model = model_of([0.5] * 6, [(0, 3, 4.0)])
    cfg = small_config(5)
    solution = solve_sp1(model, catalog, cfg, seed=9)
    want = brute_force_min_cost(model, catalog, 5)
    assert solution.module_cost(catalog) == pytest.approx(want)


def test_solver_is_deterministic_per_seed(catalog):
    model = model_of([0.4, 0.7, 0.2, 0.9, 0.5], [(0, 2, 6.0), (3, 4, 2.0)])
    a = solve_sp1(model, catalog, small_config(4), seed=5)
    b = solve_sp1(model, catalog, small_config(4), seed=5)
    assert a.to_dict() == b.to_dict()


def test_utilization_reports_fractions_of_raw_capacity(catalog):
    solution = solve_sp1(model_of([1.35]), catalog, small_config(1), seed=1)
    assert solution.utilization(catalog) == {0: pytest.approx(0.5)}


def test_allocation_round_trip(tmp_path, catalog):
    model = model_of([0.4, 0.7, 0.2], [(0, 1, 6.0)])
    solution = solve_sp1(model, catalog, small_config(3), seed=8)
    path = tmp_path / "allocation.json"
    save_allocation(solution, path)
    loaded = load_allocation(path)
    assert loaded.to_dict() == solution.to_dict()
    assert loaded.required_type_counts == solution.required_type_counts


def test_required_type_counts_reflect_included_slots(catalog):
    solution = solve_sp1(model_of([1.0] * 4), catalog, small_config(3), seed=2)
    assert solution.required_type_counts == {"M": solution.n_included}
