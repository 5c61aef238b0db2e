"""Scoring of (topology, allocation, mapping) triples.

A candidate must first clear three structural gates: the topology provides
exactly the processing modules the allocation needs, every communicating
module pair has enough vertex-disjoint paths, and the network splits into
the required number of segments with parts isolated and cross-part
traffic forced through a gateway.  Failing any gate zeroes the reward.

Past the gates, the reward is a weighted average of a latency score
(negative exponential in max link load, overloaded-link count and mean
hops), a cost score and a resilience score.

Messages travel hop-count shortest paths whose intermediate vertices are
infrastructure only; ties break toward the lexicographically smallest
vertex-id sequence, so routing is deterministic.  Disjoint-path counts
come from max-flow on a vertex-split network where infrastructure
adjacent to either endpoint is exempt from the unit capacity, mirroring
the reading that first and last switches may be shared.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .allocation import AllocationSolution
from .config import RunConfig
from .errors import InputError
from .model import (
    KIND_GATEWAY,
    KIND_PROCESSING,
    ApplicationModel,
    ModuleCatalog,
)
from .topology import TopologyGraph, processing_vertices, segments


@dataclass(frozen=True)
class ModuleMapping:
    """Assignment of processing vertices to allocation slots.

    Intended to be a bijection between the topology's processing vertices
    and the allocation's included slots; evaluation treats any shortfall
    as a gate failure rather than an error.
    """

    vertex_to_slot: dict

    def slot_of(self, vid: int) -> int:
        return self.vertex_to_slot[vid]

    def to_dict(self) -> dict:
        return {str(v): int(s) for v, s in sorted(self.vertex_to_slot.items())}

    @classmethod
    def from_dict(cls, data: dict) -> "ModuleMapping":
        try:
            return cls({int(v): int(s) for v, s in data.items()})
        except (TypeError, ValueError) as exc:
            raise InputError(f"malformed mapping document: {exc}") from None


def save_mapping(mapping: ModuleMapping, path) -> None:
    Path(path).write_text(json.dumps(mapping.to_dict(), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def load_mapping(path) -> ModuleMapping:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from None
    return ModuleMapping.from_dict(data)


def latency_score(x_l: float, o: float, h: float, alpha: float = 1.0,
                  beta: float = 1.0, gamma: float = 1.0) -> float:
    """Latency term: 2*e^(1 - alpha*x_l - beta*o) / (gamma*h), clamped to [0,1].

    h counts vertices on a route (module-switch-module is 3 hops).  h = 0
    is the no-inter-module-traffic case and scores a full 1.
    """
    if gamma <= 0:
        raise InputError("gamma must be positive")
    if h < 0:
        raise InputError("mean hop count cannot be negative")
    if h == 0:
        return 1.0
    raw = 2.0 * math.exp(1.0 - alpha * x_l - beta * o) / (gamma * h)
    return min(1.0, max(0.0, raw))


# ---------------------------------------------------------------------------
# Routing
# ---------------------------------------------------------------------------

class _Router:
    """Shortest directed routes whose interior is infrastructure only."""

    def __init__(self, g: TopologyGraph, catalog: ModuleCatalog):
        self.g = g
        self.infra = {
            vid for vid in g.vertex_ids
            if catalog.kind_of(g.label_of(vid)) != KIND_PROCESSING
        }
        self._dist_cache: dict[int, dict] = {}

    def _dist_to(self, dst: int) -> dict:
        """Distance to dst along routable edges, for every possible hop."""
        cached = self._dist_cache.get(dst)
        if cached is not None:
            return cached
        dist = {dst: 0}
        frontier = [dst]
        while frontier:
            nxt = []
            for v in frontier:
                if v != dst and v not in self.infra:
                    continue  # only infrastructure forwards traffic
                for u in self.g.in_neighbors(v):
                    if u not in dist:
                        dist[u] = dist[v] + 1
                        nxt.append(u)
            frontier = nxt
        self._dist_cache[dst] = dist
        return dist

    def route(self, src: int, dst: int) -> tuple[int, ...] | None:
        """Lexicographically smallest shortest path, or None if unreachable."""
        if src == dst:
            return (src,)
        dist = self._dist_to(dst)
        if src not in dist:
            return None
        path = [src]
        cur = src
        remaining = dist[src]
        while cur != dst:
            for w in sorted(self.g.out_neighbors(cur)):
                if w != dst and w not in self.infra:
                    continue
                if dist.get(w, -1) == remaining - 1:
                    path.append(w)
                    cur = w
                    remaining -= 1
                    break
            else:
                return None  # unreachable under BFS invariants; defensive
        return tuple(path)


def link_capacity(g: TopologyGraph, catalog: ModuleCatalog, u: int, v: int) -> float:
    """A link runs at the slower of its two endpoints' interface rates."""
    return min(catalog.spec(g.label_of(u)).link_bandwidth_mbps,
               catalog.spec(g.label_of(v)).link_bandwidth_mbps)


@dataclass(frozen=True)
class RoutingResult:
    routes: dict  # message id -> vertex path tuple; () for co-located pairs
    link_traffic: dict  # directed (u, v) -> Mbit/s
    link_loads: dict  # directed (u, v) -> fraction of capacity
    node_loads: dict  # processing vertex -> compute fraction
    unroutable: tuple  # message ids with no path

    @property
    def ok(self) -> bool:
        return not self.unroutable

    @property
    def max_link_load(self) -> float:
        return max(self.link_loads.values(), default=0.0)

    @property
    def max_node_load(self) -> float:
        return max(self.node_loads.values(), default=0.0)


def route_and_load(topology: TopologyGraph, allocation: AllocationSolution,
                   mapping: ModuleMapping, model: ApplicationModel,
                   catalog: ModuleCatalog) -> RoutingResult:
    """Route every message and accumulate link and node loads.

    Messages between processes on the same module take no network path.
    """
    for vid in mapping.vertex_to_slot:
        if not topology.has_vertex(vid):
            raise InputError(f"mapping names vertex {vid}, absent from the topology")
    slot_to_vertex = {s: v for v, s in mapping.vertex_to_slot.items()}
    router = _Router(topology, catalog)
    routes: dict[str, tuple] = {}
    traffic: dict[tuple[int, int], float] = {}
    unroutable = []
    for msg in model.messages:
        slot_a = allocation.process_assignment[msg.src]
        slot_b = allocation.process_assignment[msg.dst]
        if slot_a == slot_b:
            routes[msg.id] = ()
            continue
        va, vb = slot_to_vertex.get(slot_a), slot_to_vertex.get(slot_b)
        path = router.route(va, vb) if va is not None and vb is not None else None
        if path is None:
            unroutable.append(msg.id)
            continue
        routes[msg.id] = path
        for u, v in zip(path, path[1:]):
            traffic[(u, v)] = traffic.get((u, v), 0.0) + msg.bandwidth_mbps
    loads = {
        (u, v): t / link_capacity(topology, catalog, u, v)
        for (u, v), t in traffic.items()
    }
    node_loads = {}
    for vid, slot in mapping.vertex_to_slot.items():
        cap = catalog.spec(topology.label_of(vid)).compute_capacity_mops
        node_loads[vid] = allocation.compute_load.get(slot, 0.0) / cap
    return RoutingResult(routes, traffic, loads, node_loads, tuple(unroutable))


# ---------------------------------------------------------------------------
# Disjoint paths
# ---------------------------------------------------------------------------

def _max_flow(n: int, caps: np.ndarray, s: int, t: int, limit: int) -> int:
    """Edmonds-Karp on a dense residual matrix, stopping at limit."""
    flow = 0
    while flow < limit:
        parent = np.full(n, -1, dtype=np.int64)
        parent[s] = s
        frontier = [s]
        while frontier and parent[t] < 0:
            nxt = []
            for u in frontier:
                for v in np.flatnonzero((caps[u] > 0) & (parent < 0)):
                    parent[v] = u
                    nxt.append(int(v))
            frontier = nxt
        if parent[t] < 0:
            break
        bottleneck = limit - flow
        v = t
        while v != s:
            u = int(parent[v])
            bottleneck = min(bottleneck, int(caps[u, v]))
            v = u
        v = t
        while v != s:
            u = int(parent[v])
            caps[u, v] -= bottleneck
            caps[v, u] += bottleneck
            v = u
        flow += bottleneck
    return flow


def disjoint_paths(topology: TopologyGraph, catalog: ModuleCatalog, src: int,
                   dst: int, limit: int | None = None) -> int:
    """Vertex-disjoint route count from src to dst through infrastructure.

    Interior vertices are switches and gateways, each usable by one path,
    except infrastructure adjacent to src or dst, which any number of
    paths may share (the shared first/last switch allowance).  Every
    infrastructure-to-infrastructure edge is a single physical link and
    carries at most one path.  With a switch adjacent to both endpoints
    that allowance makes the count unbounded; the returned value is then
    the limit, whose default exceeds any bounded count for this graph.
    """
    if not topology.has_vertex(src) or not topology.has_vertex(dst):
        raise InputError("disjoint-path endpoints must exist")
    if src == dst:
        raise InputError("disjoint-path endpoints must differ")
    infra = sorted(
        vid for vid in topology.vertex_ids
        if catalog.kind_of(topology.label_of(vid)) != KIND_PROCESSING
    )
    infra_set = set(infra)
    return _disjoint_paths_flow(
        topology,
        frozenset(v for v in topology.out_neighbors(src) if v in infra_set),
        frozenset(v for v in topology.in_neighbors(dst) if v in infra_set),
        frozenset(v for v in topology.neighbors(src) if v in infra_set),
        frozenset(v for v in topology.neighbors(dst) if v in infra_set),
        topology.has_edge(src, dst),
        infra,
        limit,
    )


def _disjoint_paths_flow(topology: TopologyGraph, src_out: frozenset,
                         dst_in: frozenset, src_adj: frozenset, dst_adj: frozenset,
                         direct: bool, infra: list, limit: int | None) -> int:
    n_infra = len(infra)
    infra_set = set(infra)
    n_infra_edges = sum(1 for u, v in topology.edges if u in infra_set and v in infra_set)
    if limit is None:
        limit = n_infra + n_infra_edges + 2
    if limit <= 0:
        raise InputError("disjoint-path limit must be positive")
    direct_count = 1 if direct else 0
    if not src_out or not dst_in:
        return direct_count
    # node layout: 0 = source, 1 = sink, then (in, out) per infrastructure vertex
    idx_in = {v: 2 + 2 * i for i, v in enumerate(infra)}
    n = 2 + 2 * n_infra
    caps = np.zeros((n, n), dtype=np.int64)
    exempt = src_adj | dst_adj
    for v in infra:
        caps[idx_in[v], idx_in[v] + 1] = limit if v in exempt else 1
    for u, v in topology.edges:
        if u in infra_set and v in infra_set:
            caps[idx_in[u] + 1, idx_in[v]] = 1
    for v in src_out:
        caps[0, idx_in[v]] = limit
    for v in dst_in:
        caps[idx_in[v] + 1, 1] = limit
    flow = _max_flow(n, caps, 0, 1, limit - direct_count)
    return min(flow + direct_count, limit)


# ---------------------------------------------------------------------------
# Evaluation report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EvaluationReport:
    module_count_ok: bool
    disjoint_paths_ok: bool
    segments_ok: bool
    routing_ok: bool
    max_link_load: float  # the x_l of the latency score
    overloaded_links: int  # the o term
    mean_hops: float  # the h term, vertices per route, message-weighted
    latency_score: float
    cost_units: float
    cost_score: float
    mean_disjoint_paths: float
    dp_score: float
    reward: float
    n_segments: int
    max_node_load: float
    link_loads: dict = field(default_factory=dict, compare=False)
    node_loads: dict = field(default_factory=dict, compare=False)

    @property
    def gates_passed(self) -> bool:
        return (self.module_count_ok and self.disjoint_paths_ok
                and self.segments_ok and self.routing_ok)

    def to_dict(self) -> dict:
        return {
            "gates": {
                "module_count_ok": self.module_count_ok,
                "disjoint_paths_ok": self.disjoint_paths_ok,
                "segments_ok": self.segments_ok,
                "routing_ok": self.routing_ok,
            },
            "max_link_load": self.max_link_load,
            "overloaded_links": self.overloaded_links,
            "mean_hops": self.mean_hops,
            "latency_score": self.latency_score,
            "cost_units": self.cost_units,
            "cost_score": self.cost_score,
            "mean_disjoint_paths": self.mean_disjoint_paths,
            "dp_score": self.dp_score,
            "reward": self.reward,
            "n_segments": self.n_segments,
            "max_node_load": self.max_node_load,
            "link_loads": {f"{u}->{v}": load for (u, v), load in sorted(self.link_loads.items())},
            "node_loads": {str(v): load for v, load in sorted(self.node_loads.items())},
        }


def save_report(report: EvaluationReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def _failed_report(cost: float, n_segments: int, module_count_ok: bool = False,
                   disjoint_paths_ok: bool = False, segments_ok: bool = False,
                   routing_ok: bool = True) -> EvaluationReport:
    return EvaluationReport(
        module_count_ok=module_count_ok,
        disjoint_paths_ok=disjoint_paths_ok,
        segments_ok=segments_ok,
        routing_ok=routing_ok,
        max_link_load=0.0, overloaded_links=0, mean_hops=0.0, latency_score=0.0,
        cost_units=cost, cost_score=0.0, mean_disjoint_paths=0.0, dp_score=0.0,
        reward=0.0, n_segments=n_segments, max_node_load=0.0,
    )


def topology_cost(topology: TopologyGraph, catalog: ModuleCatalog,
                  link_cost_units: float) -> float:
    vertex_cost = sum(catalog.spec(topology.label_of(v)).cost_units
                      for v in topology.vertex_ids)
    return float(vertex_cost + topology.n_links * link_cost_units)


class TopologyEvaluator:
    """Evaluates many mappings of one topology against one allocation.

    Everything that does not depend on the mapping (routes, disjoint-path
    counts, link capacities, segment structure) is computed once here, so
    scoring a mapping batch is pure array work.  Mapping genomes are
    permutations: position = processing-vertex ordinal (ascending vertex
    id), value = included-slot ordinal (ascending slot index).
    """

    def __init__(self, topology: TopologyGraph, allocation: AllocationSolution,
                 model: ApplicationModel, config: RunConfig, catalog: ModuleCatalog):
        config.validate()
        self.topology = topology
        self.allocation = allocation
        self.config = config
        self.catalog = catalog
        self.proc_vids = processing_vertices(topology, catalog)
        self.slots = allocation.included_slots
        self.P = len(self.proc_vids)
        self.cost_units = topology_cost(topology, catalog, config.link_cost_units)
        self.cost_floor = allocation.module_cost(catalog)
        self.size_ok = self.P == len(self.slots) and self.P > 0

        counts: dict[str, int] = {}
        for vid in self.proc_vids:
            lab = topology.label_of(vid)
            counts[lab] = counts.get(lab, 0) + 1
        self.counts_ok = counts == allocation.required_type_counts

        segs = segments(topology, catalog)
        self.n_segments = len(segs)
        self.seg_of = np.full(self.P, -1, dtype=np.int64)
        for i, vid in enumerate(self.proc_vids):
            for k, comp in enumerate(segs):
                if vid in comp:
                    self.seg_of[i] = k
                    break

        if not self.size_ok:
            return

        # slot-ordinal-indexed views of the allocation
        slot_ord = {s: k for k, s in enumerate(self.slots)}
        parts = list(model.parts)
        part_ord = {p: i for i, p in enumerate(parts)}
        self.n_parts = len(parts)
        self.part_of_slot = np.zeros(self.P, dtype=np.int64)
        slot_part_seen: dict[int, str] = {}
        for p in model.processes:
            s = allocation.process_assignment[p.id]
            if s in slot_ord:
                slot_part_seen.setdefault(s, p.part)
        for s, k in slot_ord.items():
            self.part_of_slot[k] = part_ord[slot_part_seen.get(s, parts[0])]

        self.traffic = np.zeros((self.P, self.P), dtype=np.float64)
        self.msg_count = np.zeros((self.P, self.P), dtype=np.float64)
        for (a, b), bw in allocation.inter_module_traffic.items():
            if a in slot_ord and b in slot_ord:
                self.traffic[slot_ord[a], slot_ord[b]] = bw
        for msg in model.messages:
            a = allocation.process_assignment[msg.src]
            b = allocation.process_assignment[msg.dst]
            if a != b and a in slot_ord and b in slot_ord:
                self.msg_count[slot_ord[a], slot_ord[b]] += 1

        # vertex-pair routes, shared by every mapping
        router = _Router(topology, catalog)
        dlinks = sorted(topology.edges)
        link_idx = {e: i for i, e in enumerate(dlinks)}
        self.dlinks = dlinks
        self.link_caps = np.asarray(
            [link_capacity(topology, catalog, u, v) for u, v in dlinks]
        )
        L = len(dlinks)
        self.hops = np.zeros((self.P, self.P), dtype=np.float64)
        self.routable = np.ones((self.P, self.P), dtype=bool)
        self.through_gateway = np.zeros((self.P, self.P), dtype=bool)
        self.link_use = np.zeros((L, self.P * self.P), dtype=np.float64)
        gateway_vids = {
            vid for vid in topology.vertex_ids
            if catalog.kind_of(topology.label_of(vid)) == KIND_GATEWAY
        }
        for i, va in enumerate(self.proc_vids):
            for j, vb in enumerate(self.proc_vids):
                if i == j:
                    continue
                path = router.route(va, vb)
                if path is None:
                    self.routable[i, j] = False
                    continue
                self.hops[i, j] = len(path)
                self.through_gateway[i, j] = any(v in gateway_vids for v in path[1:-1])
                for u, v in zip(path, path[1:]):
                    self.link_use[link_idx[(u, v)], i * self.P + j] = 1.0

        # pairwise disjoint paths, cached per adjacency signature
        dp_limit = 2 * config.required_disjoint_paths
        infra = sorted(
            vid for vid in topology.vertex_ids
            if catalog.kind_of(topology.label_of(vid)) != KIND_PROCESSING
        )
        infra_set = set(infra)
        sig_cache: dict = {}

        def flow_for(va: int, vb: int) -> int:
            key = (
                frozenset(v for v in topology.out_neighbors(va) if v in infra_set),
                frozenset(v for v in topology.in_neighbors(vb) if v in infra_set),
                frozenset(v for v in topology.neighbors(va) if v in infra_set),
                frozenset(v for v in topology.neighbors(vb) if v in infra_set),
                topology.has_edge(va, vb),
            )
            if key not in sig_cache:
                sig_cache[key] = _disjoint_paths_flow(
                    topology, key[0], key[1], key[2], key[3], key[4], infra, dp_limit
                )
            return sig_cache[key]

        self.dp = np.zeros((self.P, self.P), dtype=np.float64)
        for i, va in enumerate(self.proc_vids):
            for j, vb in enumerate(self.proc_vids):
                if i < j:
                    count = min(flow_for(va, vb), flow_for(vb, va))
                    self.dp[i, j] = self.dp[j, i] = count

        # node loads: slot ordinal load over vertex capacity, type-aware
        loads = np.asarray([allocation.compute_load.get(s, 0.0) for s in self.slots])
        caps_v = np.asarray([
            catalog.spec(topology.label_of(v)).compute_capacity_mops
            for v in self.proc_vids
        ])
        self.slot_loads = loads
        self.vertex_caps = caps_v
        self.type_ok = np.zeros((self.P, self.P), dtype=bool)  # [vertex ord, slot ord]
        for i, vid in enumerate(self.proc_vids):
            lab = topology.label_of(vid)
            for k, s in enumerate(self.slots):
                self.type_ok[i, k] = allocation.slot_types[s] == lab

        w = config
        self.weights = np.asarray([w.weight_latency, w.weight_cost, w.weight_resilience])
        self.cost_score = min(1.0, max(0.0, self.cost_floor / self.cost_units)) \
            if self.cost_units > 0 else 0.0

    # -- batch scoring -------------------------------------------------------

    def batch_rewards(self, genomes: np.ndarray) -> np.ndarray:
        """Rewards for a (B, P) batch of permutation genomes."""
        genomes = np.asarray(genomes, dtype=np.int64)
        B = genomes.shape[0]
        if not (self.size_ok and self.counts_ok):
            return np.zeros(B)
        return self._scores(genomes)[0]

    def _scores(self, genomes: np.ndarray):
        B, P = genomes.shape
        rows = np.arange(P)
        typed_ok = self.type_ok[rows[None, :], genomes].all(axis=1)

        # traffic seen at the vertex level: T_v[i, j] = traffic[g[i], g[j]]
        gi = genomes[:, :, None] * P + genomes[:, None, :]
        t_flat = self.traffic.ravel()[gi.reshape(B, -1)]
        c_flat = self.msg_count.ravel()[gi.reshape(B, -1)]
        h_flat = np.broadcast_to(self.hops.ravel(), (B, P * P))
        r_flat = np.broadcast_to(self.routable.ravel(), (B, P * P))
        gw_flat = np.broadcast_to(self.through_gateway.ravel(), (B, P * P))
        dp_flat = np.broadcast_to(self.dp.ravel(), (B, P * P))

        communicating = t_flat > 0
        routing_ok = (r_flat | ~communicating).all(axis=1)

        loads = (t_flat @ self.link_use.T) / self.link_caps
        x_l = loads.max(axis=1) if loads.shape[1] else np.zeros(B)
        o = (loads > self.config.overload_threshold).sum(axis=1).astype(np.float64)

        total_msgs = c_flat.sum(axis=1)
        h = np.divide((c_flat * h_flat).sum(axis=1), total_msgs,
                      out=np.zeros(B), where=total_msgs > 0)

        # disjoint paths over unordered communicating pairs
        comm_pair = (communicating | communicating.reshape(B, P, P).transpose(0, 2, 1)
                     .reshape(B, P * P))
        upper = np.broadcast_to((rows[:, None] < rows[None, :]).ravel(), (B, P * P))
        pair_mask = comm_pair & upper
        n_pairs = pair_mask.sum(axis=1)
        required = self.config.required_disjoint_paths
        dp_ok = ((dp_flat >= required) | ~pair_mask).all(axis=1)
        mean_dp = np.divide((dp_flat * pair_mask).sum(axis=1), n_pairs,
                            out=np.full(B, float(required)), where=n_pairs > 0)

        # part isolation: each part in exactly one segment, no segment shared
        parts_v = self.part_of_slot[genomes]  # (B, P) part of each vertex
        seg_v = np.broadcast_to(self.seg_of, (B, P))
        seg_count_ok = self.n_segments == self.config.required_segments
        isolated = np.ones(B, dtype=bool)
        for b in range(B):
            combos = set(zip(parts_v[b].tolist(), seg_v[b].tolist()))
            seen_parts = {p for p, _ in combos}
            seen_segs = [s for _, s in combos]
            isolated[b] = (len(combos) == len(seen_parts)
                           and len(set(seen_segs)) == len(seen_segs))
        cross_part = np.broadcast_to(
            (parts_v[:, :, None] != parts_v[:, None, :]).reshape(B, P * P), (B, P * P)
        )
        gw_ok = (gw_flat | ~(communicating & cross_part)).all(axis=1)
        segments_ok = seg_count_ok & isolated & gw_ok

        module_ok = typed_ok  # counts already checked topology-wide
        gates = module_ok & dp_ok & segments_ok & routing_ok

        l_s = np.clip(2.0 * np.exp(1.0 - self.config.alpha * x_l - self.config.beta * o)
                      / np.where(h > 0, self.config.gamma * h, 1.0), 0.0, 1.0)
        l_s = np.where(h > 0, l_s, 1.0)
        dp_score = np.clip(mean_dp / required, 0.0, 1.0)
        wl, wc, wr = self.weights
        reward = (wl * l_s + wc * self.cost_score + wr * dp_score) / self.weights.sum()
        reward = np.where(gates, reward, 0.0)
        extras = {
            "x_l": x_l, "o": o, "h": h, "l_s": l_s, "mean_dp": mean_dp,
            "dp_score": dp_score, "module_ok": module_ok, "dp_ok": dp_ok,
            "segments_ok": segments_ok, "routing_ok": routing_ok,
            "loads": loads,
        }
        return reward, extras

    # -- single-mapping report ----------------------------------------------

    def genome_of(self, mapping: ModuleMapping) -> np.ndarray | None:
        """Permutation form of a mapping, or None when it is not a bijection."""
        slot_ord = {s: k for k, s in enumerate(self.slots)}
        genome = np.zeros(self.P, dtype=np.int64)
        seen = set()
        for i, vid in enumerate(self.proc_vids):
            slot = mapping.vertex_to_slot.get(vid)
            if slot is None or slot not in slot_ord or slot in seen:
                return None
            seen.add(slot)
            genome[i] = slot_ord[slot]
        return genome if len(mapping.vertex_to_slot) == self.P else None

    def mapping_of(self, genome: np.ndarray) -> ModuleMapping:
        return ModuleMapping({
            int(vid): int(self.slots[genome[i]]) for i, vid in enumerate(self.proc_vids)
        })

    def report(self, genome: np.ndarray | None) -> EvaluationReport:
        if genome is None or not (self.size_ok and self.counts_ok):
            return _failed_report(self.cost_units, self.n_segments)
        reward, ex = self._scores(genome[None, :])
        loads = ex["loads"][0]
        link_loads = {
            self.dlinks[i]: float(loads[i]) for i in np.flatnonzero(loads > 0)
        }
        node_loads = {
            int(self.proc_vids[i]): float(self.slot_loads[genome[i]] / self.vertex_caps[i])
            for i in range(self.P)
        }
        max_node = max(node_loads.values(), default=0.0)
        return EvaluationReport(
            module_count_ok=bool(ex["module_ok"][0]),
            disjoint_paths_ok=bool(ex["dp_ok"][0]),
            segments_ok=bool(ex["segments_ok"][0]),
            routing_ok=bool(ex["routing_ok"][0]),
            max_link_load=float(ex["x_l"][0]),
            overloaded_links=int(ex["o"][0]),
            mean_hops=float(ex["h"][0]),
            latency_score=float(ex["l_s"][0]),
            cost_units=self.cost_units,
            cost_score=float(self.cost_score),
            mean_disjoint_paths=float(ex["mean_dp"][0]),
            dp_score=float(ex["dp_score"][0]),
            reward=float(reward[0]),
            n_segments=self.n_segments,
            max_node_load=float(max_node),
            link_loads=link_loads,
            node_loads=node_loads,
        )


def check_gates(topology: TopologyGraph, allocation: AllocationSolution,
                mapping: ModuleMapping, model: ApplicationModel, config: RunConfig,
                catalog: ModuleCatalog) -> dict:
    report = evaluate(topology, allocation, mapping, model, config, catalog)
    return {
        "module_count_ok": report.module_count_ok,
        "disjoint_paths_ok": report.disjoint_paths_ok,
        "segments_ok": report.segments_ok,
        "routing_ok": report.routing_ok,
    }


def evaluate(topology: TopologyGraph, allocation: AllocationSolution,
             mapping: ModuleMapping, model: ApplicationModel, config: RunConfig,
             catalog: ModuleCatalog) -> EvaluationReport:
    """Full scoring pipeline for one mapped topology."""
    ev = TopologyEvaluator(topology, allocation, model, config, catalog)
    if not (ev.size_ok and ev.counts_ok):
        return _failed_report(ev.cost_units, ev.n_segments)
    return ev.report(ev.genome_of(mapping))
