from __future__ import annotations

import json
from importlib.resources import files

import numpy as np
import pytest

from netgap import RunConfig, TopologyGraph, parse_grammar
from netgap.allocation import AllocationGenome, AllocationSolution
from netgap.evaluation import ModuleMapping
from netgap.model import ApplicationModel, Message, Process, module_catalog_from_dict

_DATA = files("netgap") / "data"


def data_text(name: str) -> str:
    return (_DATA / name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def catalog():
    return module_catalog_from_dict(json.loads(data_text("catalog_avionics.json")))


@pytest.fixture(scope="session")
def switch_grammar():
    return parse_grammar(data_text("simple_switch.grammar"))


@pytest.fixture(scope="session")
def segmented_grammar():
    return parse_grammar(data_text("segmented_mesh.grammar"))


def manual_allocation(model: ApplicationModel, assignment: dict, n_slots: int,
                      slot_type: str = "M") -> AllocationSolution:
    """Allocation built by hand from a process->slot map, loads included."""
    inclusion = np.zeros(n_slots, dtype=bool)
    for slot in assignment.values():
        inclusion[slot] = True
    order = np.asarray([assignment[p.id] for p in model.processes], dtype=np.int64)
    compute: dict[int, float] = {}
    for p in model.processes:
        slot = assignment[p.id]
        compute[slot] = compute.get(slot, 0.0) + p.compute_mops
    out: dict[int, float] = {}
    into: dict[int, float] = {}
    traffic: dict[tuple[int, int], float] = {}
    for m in model.messages:
        a, b = assignment[m.src], assignment[m.dst]
        if a == b:
            continue
        out[a] = out.get(a, 0.0) + m.bandwidth_mbps
        into[b] = into.get(b, 0.0) + m.bandwidth_mbps
        traffic[(a, b)] = traffic.get((a, b), 0.0) + m.bandwidth_mbps
    return AllocationSolution(
        genome=AllocationGenome(inclusion, order),
        slot_types=(slot_type,) * n_slots,
        process_assignment=dict(assignment),
        compute_load=compute,
        bandwidth_out=out,
        bandwidth_in=into,
        inter_module_traffic=traffic,
        feasible=True,
    )


def two_segment_world():
    """A hand-sized instance whose best mapping passes every gate.

    Two FCP processes behind switch sa, one MOP process behind sc, and two
    gateways bridging the switches so every communicating pair has two
    disjoint routes.
    """
    model = ApplicationModel(
        [
            Process("f0", "FCP", period_ms=10.0, compute_mops=0.5),
            Process("f1", "FCP", period_ms=10.0, compute_mops=0.5),
            Process("m0", "MOP", period_ms=10.0, compute_mops=0.4),
        ],
        [
            Message("x", "f0", "f1", size_bits=200_000.0, period_ms=10.0),  # 20 Mbit/s
            Message("y", "f0", "m0", size_bits=100_000.0, period_ms=10.0),  # 10 Mbit/s
        ],
    )
    allocation = manual_allocation(model, {"f0": 0, "f1": 1, "m0": 2}, 3)
    g = TopologyGraph.empty()
    g, va = g.with_vertex("M")
    g, vb = g.with_vertex("M")
    g, vc = g.with_vertex("M")
    g, sa = g.with_vertex("S")
    g, sc = g.with_vertex("S")
    g, g1 = g.with_vertex("G")
    g, g2 = g.with_vertex("G")
    g = (g.with_bidi_edge(va, sa).with_bidi_edge(vb, sa).with_bidi_edge(vc, sc)
         .with_bidi_edge(sa, g1).with_bidi_edge(sa, g2)
         .with_bidi_edge(sc, g1).with_bidi_edge(sc, g2))
    mapping = ModuleMapping({va: 0, vb: 1, vc: 2})
    ids = {"va": va, "vb": vb, "vc": vc, "sa": sa, "sc": sc, "g1": g1, "g2": g2}
    return model, allocation, g, mapping, ids


def random_evaluation_case(rng: np.random.Generator):
    """A random (model, allocation, topology, mapping, config) quintuple.

    Structure is deliberately messy: clusters may lack gateway bridges,
    modules may outnumber slots, and the segment requirement may not match
    what was built, so fuzzing exercises passing and failing gates alike.
    """
    n_parts = int(rng.integers(1, 3))
    part_names = ["FCP", "MOP"][:n_parts]
    procs, msgs, assignment = [], [], {}
    slot = 0
    slots_of_part: dict[str, list[int]] = {}
    for part in part_names:
        slots_of_part[part] = []
        for _ in range(int(rng.integers(1, 4))):
            for k in range(int(rng.integers(1, 3))):
                pid = f"{part}_p{len(procs)}"
                procs.append(Process(pid, part, period_ms=10.0,
                                     compute_mops=float(rng.uniform(0.1, 0.8))))
                assignment[pid] = slot
            slots_of_part[part].append(slot)
            slot += 1
    n_msgs = int(rng.integers(0, 9)) if len(procs) > 1 else 0
    for k in range(n_msgs):
        a, b = rng.choice(len(procs), size=2, replace=False)
        msgs.append(Message(f"m{k}", procs[int(a)].id, procs[int(b)].id,
                            size_bits=float(rng.uniform(1.0, 8.0)) * 10_000.0,
                            period_ms=10.0))
    model = ApplicationModel(procs, msgs)
    allocation = manual_allocation(model, assignment, slot)

    g = TopologyGraph.empty()
    module_vids = []
    n_modules = slot if rng.random() < 0.8 else slot + int(rng.integers(1, 3))
    for _ in range(n_modules):
        g, v = g.with_vertex("M")
        module_vids.append(v)
    switch_of_part = {}
    switches = []
    for part in part_names:
        cluster = []
        for _ in range(int(rng.integers(1, 3))):
            g, s = g.with_vertex("S")
            cluster.append(s)
            switches.append(s)
        for a, b in zip(cluster, cluster[1:]):
            g = g.with_bidi_edge(a, b)
        switch_of_part[part] = cluster
    for i, v in enumerate(module_vids):
        if not switches:
            break
        if i < slot:
            part = next(p for p in part_names if i in slots_of_part[p])
            home = switch_of_part[part]
        else:
            home = switches
        g = g.with_bidi_edge(v, int(rng.choice(home)))
    if n_parts == 2:
        for _ in range(int(rng.integers(0, 3))):
            g, gw = g.with_vertex("G")
            g = g.with_bidi_edge(gw, int(rng.choice(switch_of_part["FCP"])))
            g = g.with_bidi_edge(gw, int(rng.choice(switch_of_part["MOP"])))

    perm = rng.permutation(slot)
    mapping = ModuleMapping({module_vids[i]: int(perm[i]) for i in range(min(slot, len(module_vids)))})
    config = RunConfig()
    config.required_segments = int(rng.integers(1, 4))
    return model, allocation, g, mapping, config
