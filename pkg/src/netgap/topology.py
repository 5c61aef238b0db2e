"""Labeled directed graphs and the production-rule rewriting engine.

Graphs are immutable: applying an action returns a new graph and leaves
the original untouched, which lets search trees share ancestors freely.
Vertex ids are stable and monotonically increasing, so the identity of a
vertex survives any number of rewrites around it.

Matching binds the left side of a rule to distinct vertices with matching
labels, satisfied degree intervals (degree counts distinct adjacent
vertices, a <-> pair counts once) and all required edges present.  A rule
that adds an edge between two preserved nodes additionally requires that
edge to be absent, so connect-style rules never create parallel links.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError, StaleActionError
from .grammar import Grammar, ProductionRule, RuleEffect, classify_rule, key_str
from .model import KIND_GATEWAY, KIND_PROCESSING, ModuleCatalog

_effect = functools.lru_cache(maxsize=None)(classify_rule)


@dataclass(frozen=True)
class Action:
    """One applicable rewrite: a rule plus the vertices its LHS binds.

    The binding lists vertex ids in the rule's canonical LHS node order.
    """

    rule_name: str
    binding: tuple[int, ...]

    @property
    def signature(self) -> tuple[int, ...]:
        return tuple(sorted(self.binding))

    def __str__(self):
        return f"{self.rule_name}({', '.join(map(str, self.binding))})"


class TopologyGraph:
    __slots__ = ("_ids", "_labels", "_edges", "_next_id", "_derived")

    def __init__(self, ids=(), labels=(), edges=frozenset(), next_id=0):
        self._ids: tuple[int, ...] = tuple(ids)
        self._labels: tuple[str, ...] = tuple(labels)
        self._edges: frozenset = frozenset(edges)
        self._next_id: int = next_id
        self._derived: dict = {}
        if len(self._ids) != len(self._labels):
            raise InputError("vertex id and label lists differ in length")

    @classmethod
    def empty(cls) -> "TopologyGraph":
        return cls()

    # -- derived structures, computed lazily and cached ---------------------

    def _get(self, name: str):
        try:
            return self._derived[name]
        except KeyError:
            value = getattr(self, "_build" + name)()
            self._derived[name] = value
            return value

    def _build_pos(self) -> dict:
        return {vid: i for i, vid in enumerate(self._ids)}

    def _build_adj(self) -> np.ndarray:
        n = len(self._ids)
        adj = np.zeros((n, n), dtype=bool)
        pos = self._get("_pos")
        for u, v in self._edges:
            adj[pos[u], pos[v]] = True
        return adj

    def _build_degrees(self) -> np.ndarray:
        adj = self._get("_adj")
        return (adj | adj.T).sum(axis=1).astype(np.int64)

    def _build_label_pos(self) -> dict:
        out: dict[str, list] = {}
        for i, lab in enumerate(self._labels):
            out.setdefault(lab, []).append(i)
        return {lab: np.asarray(v, dtype=np.int64) for lab, v in out.items()}

    # -- basic queries -------------------------------------------------------

    @property
    def vertex_ids(self) -> tuple[int, ...]:
        return self._ids

    @property
    def edges(self) -> frozenset:
        return self._edges

    @property
    def n_vertices(self) -> int:
        return len(self._ids)

    @property
    def n_directed_edges(self) -> int:
        return len(self._edges)

    @property
    def n_links(self) -> int:
        """Physical links: unordered vertex pairs connected by >= 1 edge."""
        return len({frozenset(e) for e in self._edges})

    def label_of(self, vid: int) -> str:
        return self._labels[self._get("_pos")[vid]]

    def has_vertex(self, vid: int) -> bool:
        return vid in self._get("_pos")

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._edges

    def label_counts(self) -> dict:
        out: dict[str, int] = {}
        for lab in self._labels:
            out[lab] = out.get(lab, 0) + 1
        return out

    def out_neighbors(self, vid: int) -> tuple[int, ...]:
        pos = self._get("_pos")[vid]
        cols = np.flatnonzero(self._get("_adj")[pos])
        return tuple(self._ids[c] for c in cols)

    def in_neighbors(self, vid: int) -> tuple[int, ...]:
        pos = self._get("_pos")[vid]
        rows = np.flatnonzero(self._get("_adj")[:, pos])
        return tuple(self._ids[r] for r in rows)

    def neighbors(self, vid: int) -> tuple[int, ...]:
        pos = self._get("_pos")[vid]
        adj = self._get("_adj")
        both = np.flatnonzero(adj[pos] | adj[:, pos])
        return tuple(self._ids[i] for i in both)

    def degree(self, vid: int) -> int:
        """Number of distinct adjacent vertices, direction-blind."""
        return int(self._get("_degrees")[self._get("_pos")[vid]])

    # -- construction helpers ------------------------------------------------

    def with_vertex(self, label: str) -> tuple["TopologyGraph", int]:
        vid = self._next_id
        g = TopologyGraph(self._ids + (vid,), self._labels + (label,), self._edges, vid + 1)
        return g, vid

    def with_edge(self, u: int, v: int) -> "TopologyGraph":
        pos = self._get("_pos")
        if u not in pos or v not in pos:
            raise InputError(f"edge ({u}, {v}) references a missing vertex")
        if u == v:
            raise InputError("self-loops are not allowed")
        if (u, v) in self._edges:
            raise InputError(f"edge ({u}, {v}) already exists")
        return TopologyGraph(self._ids, self._labels, self._edges | {(u, v)}, self._next_id)

    def with_bidi_edge(self, u: int, v: int) -> "TopologyGraph":
        return self.with_edge(u, v).with_edge(v, u)

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "vertices": [{"id": vid, "label": lab} for vid, lab in zip(self._ids, self._labels)],
            "edges": sorted([list(e) for e in self._edges]),
            "next_id": self._next_id,
        }

    @classmethod
    def from_dict(cls, data) -> "TopologyGraph":
        try:
            vertices = [(int(v["id"]), str(v["label"])) for v in data["vertices"]]
            edges = [(int(u), int(v)) for u, v in data["edges"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed topology document: {exc}") from None
        vertices.sort()
        ids = tuple(v[0] for v in vertices)
        if len(set(ids)) != len(ids):
            raise InputError("duplicate vertex ids in topology document")
        id_set = set(ids)
        for u, v in edges:
            if u == v:
                raise InputError("self-loops are not allowed")
            if u not in id_set or v not in id_set:
                raise InputError(f"edge ({u}, {v}) references a missing vertex")
        next_id = int(data.get("next_id", (max(ids) + 1) if ids else 0))
        if ids and next_id <= max(ids):
            raise InputError("next_id must exceed every vertex id")
        return cls(ids, tuple(v[1] for v in vertices), frozenset(edges), next_id)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_dot(self, catalog: ModuleCatalog | None = None) -> str:
        shapes = {KIND_PROCESSING: "box", KIND_GATEWAY: "diamond"}
        lines = ["digraph topology {", "  rankdir=LR;"]
        for vid, lab in zip(self._ids, self._labels):
            attrs = [f'label="{lab}{vid}"']
            if catalog is not None and lab in catalog:
                shape = shapes.get(catalog.kind_of(lab))
                if shape:
                    attrs.append(f"shape={shape}")
            lines.append(f"  v{vid} [{', '.join(attrs)}];")
        seen = set()
        for u, v in sorted(self._edges):
            if (v, u) in self._edges:
                if (v, u) in seen:
                    continue
                seen.add((u, v))
                lines.append(f"  v{u} -> v{v} [dir=both];")
            else:
                lines.append(f"  v{u} -> v{v};")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def __eq__(self, other):
        return (
            isinstance(other, TopologyGraph)
            and self._ids == other._ids
            and self._labels == other._labels
            and self._edges == other._edges
        )

    def __repr__(self):
        return f"TopologyGraph({self.n_vertices} vertices, {self.n_directed_edges} edges)"


def save_topology(g: TopologyGraph, path) -> None:
    Path(path).write_text(g.to_json(), encoding="utf-8")


def load_topology(path) -> TopologyGraph:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from None
    return TopologyGraph.from_dict(data)


# ---------------------------------------------------------------------------
# Matching
# ---------------------------------------------------------------------------

def _candidate_positions(g: TopologyGraph, rule: ProductionRule) -> list[np.ndarray] | None:
    """Per LHS pattern node, positions whose label and degree interval fit."""
    out = []
    degrees = g._get("_degrees") if g.n_vertices else np.zeros(0, dtype=np.int64)
    label_pos = g._get("_label_pos")
    for pat in rule.lhs.nodes:
        positions = label_pos.get(pat.label)
        if positions is None:
            return None
        if pat.interval is not None:
            lo, hi = pat.interval
            d = degrees[positions]
            positions = positions[(d >= lo) & (d <= hi)]
            if positions.size == 0:
                return None
        out.append(positions)
    return out


def _binding_positions(g: TopologyGraph, rule: ProductionRule) -> np.ndarray:
    """All valid LHS bindings as an array of vertex positions, shape (count, k).

    Rows are sorted lexicographically, which (positions follow ascending
    vertex ids) makes enumeration order deterministic.
    """
    k = len(rule.lhs.nodes)
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64)
    cands = _candidate_positions(g, rule)
    if cands is None:
        return np.zeros((0, k), dtype=np.int64)
    effect = _effect(rule)
    keys = [n.key for n in rule.lhs.nodes]
    kidx = {key: i for i, key in enumerate(keys)}
    adj = g._get("_adj")
    if k == 1:
        return cands[0].reshape(-1, 1)
    if k == 2:
        valid = np.zeros((g.n_vertices, g.n_vertices), dtype=bool)
        valid[np.ix_(cands[0], cands[1])] = True
        np.fill_diagonal(valid, False)
        for u, v in rule.lhs.edges:
            need = adj if (kidx[u], kidx[v]) == (0, 1) else adj.T
            valid &= need
        for u, v in effect.requires_absent_edges:
            absent = adj if (kidx[u], kidx[v]) == (0, 1) else adj.T
            valid &= ~absent
        return np.argwhere(valid)
    # General backtracking for three or more pattern nodes.
    edge_idx = [(kidx[u], kidx[v]) for u, v in rule.lhs.edges]
    absent_idx = [(kidx[u], kidx[v]) for u, v in effect.requires_absent_edges]
    rows: list[tuple[int, ...]] = []
    chosen: list[int] = []

    def backtrack(depth: int) -> None:
        if depth == k:
            for i, j in absent_idx:
                if adj[chosen[i], chosen[j]]:
                    return
            rows.append(tuple(chosen))
            return
        for p in cands[depth].tolist():
            if p in chosen:
                continue
            ok = True
            for i, j in edge_idx:
                if i == depth and j < depth and not adj[p, chosen[j]]:
                    ok = False
                    break
                if j == depth and i < depth and not adj[chosen[i], p]:
                    ok = False
                    break
            if not ok:
                continue
            chosen.append(p)
            backtrack(depth + 1)
            chosen.pop()

    backtrack(0)
    return np.asarray(rows, dtype=np.int64).reshape(len(rows), k)


class ActionSpace:
    """All actions applicable to one graph, indexable without materializing."""

    def __init__(self, g: TopologyGraph, grammar: Grammar):
        self.graph = g
        self.grammar = grammar
        self._rules = grammar.rules
        self._bindings = [_binding_positions(g, r) for r in self._rules]
        self._counts = np.asarray([b.shape[0] for b in self._bindings], dtype=np.int64)
        self._offsets = np.concatenate(([0], np.cumsum(self._counts)))
        self.total = int(self._offsets[-1])

    def action_at(self, flat: int) -> Action:
        if not (0 <= flat < self.total):
            raise IndexError(flat)
        r = int(np.searchsorted(self._offsets, flat, side="right")) - 1
        row = self._bindings[r][flat - self._offsets[r]]
        ids = self.graph.vertex_ids
        return Action(self._rules[r].name, tuple(int(ids[p]) for p in row))

    def sample(self, rng: np.random.Generator) -> Action:
        return self.action_at(int(rng.integers(self.total)))

    def sample_capped(self, rng: np.random.Generator, cap: int) -> list[Action]:
        """All actions when they fit under the cap, else a uniform sample."""
        if self.total <= cap:
            return [self.action_at(i) for i in range(self.total)]
        picks = np.sort(rng.choice(self.total, size=cap, replace=False))
        return [self.action_at(int(i)) for i in picks]


def enumerate_actions(g: TopologyGraph, grammar: Grammar) -> list[Action]:
    """All applicable actions, ordered by rule then ascending bound ids."""
    space = ActionSpace(g, grammar)
    return [space.action_at(i) for i in range(space.total)]


def _validate_binding(g: TopologyGraph, rule: ProductionRule, binding: tuple) -> None:
    if len(binding) != len(rule.lhs.nodes):
        raise StaleActionError(f"rule {rule.name!r}: binding arity mismatch")
    if len(set(binding)) != len(binding):
        raise StaleActionError(f"rule {rule.name!r}: binding repeats a vertex")
    for pat, vid in zip(rule.lhs.nodes, binding):
        if not g.has_vertex(vid):
            raise StaleActionError(f"rule {rule.name!r}: vertex {vid} no longer exists")
        if g.label_of(vid) != pat.label:
            raise StaleActionError(f"rule {rule.name!r}: vertex {vid} is not labeled {pat.label!r}")
        if pat.interval is not None:
            lo, hi = pat.interval
            if not (lo <= g.degree(vid) <= hi):
                raise StaleActionError(
                    f"rule {rule.name!r}: degree of vertex {vid} left interval [{lo}-{hi}]"
                )
    by_key = {pat.key: vid for pat, vid in zip(rule.lhs.nodes, binding)}
    for u, v in rule.lhs.edges:
        if not g.has_edge(by_key[u], by_key[v]):
            raise StaleActionError(f"rule {rule.name!r}: required edge {key_str(u)}->{key_str(v)} is missing")
    for u, v in _effect(rule).requires_absent_edges:
        if g.has_edge(by_key[u], by_key[v]):
            raise StaleActionError(
                f"rule {rule.name!r}: edge {key_str(u)}->{key_str(v)} already exists"
            )


def apply_action(g: TopologyGraph, grammar: Grammar, action: Action) -> TopologyGraph:
    """Apply one action and return the rewritten graph.

    The binding is re-validated against the given graph first; applying an
    action that was enumerated on a different graph raises StaleActionError
    rather than corrupting anything.
    """
    rule = grammar.rule(action.rule_name)
    _validate_binding(g, rule, action.binding)
    by_key = {pat.key: vid for pat, vid in zip(rule.lhs.nodes, action.binding)}
    if rule.is_relabel:
        pos = g._get("_pos")[action.binding[0]]
        labels = list(g._labels)
        labels[pos] = rule.rhs.nodes[0].label
        return TopologyGraph(g._ids, tuple(labels), g._edges, g._next_id)
    effect = _effect(rule)
    removed = {by_key[k] for k in effect.deleted_nodes}
    new_ids = list(g._ids)
    new_labels = list(g._labels)
    next_id = g._next_id
    for key in effect.added_nodes:
        by_key[key] = next_id
        new_ids.append(next_id)
        new_labels.append(rule.rhs.node(key).label)
        next_id += 1
    if removed:
        keep = [i for i, vid in enumerate(new_ids) if vid not in removed]
        new_ids = [new_ids[i] for i in keep]
        new_labels = [new_labels[i] for i in keep]
    deleted_edges = {(by_key[u], by_key[v]) for u, v in effect.deleted_edges}
    edges = {
        e for e in g._edges
        if e not in deleted_edges and e[0] not in removed and e[1] not in removed
    }
    for u, v in effect.added_edges:
        edge = (by_key[u], by_key[v])
        if edge in edges:
            raise StaleActionError(
                f"rule {rule.name!r}: adding edge {edge} would create a parallel link"
            )
        edges.add(edge)
    return TopologyGraph(tuple(new_ids), tuple(new_labels), frozenset(edges), next_id)


# ---------------------------------------------------------------------------
# Structure queries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StructuralStats:
    type_counts: dict
    kind_counts: dict
    n_vertices: int
    n_links: int
    n_directed_edges: int
    n_segments: int


def _components(ids, nbrs) -> list[frozenset]:
    seen: set[int] = set()
    comps = []
    for start in ids:
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        seen.add(start)
        while stack:
            v = stack.pop()
            for w in nbrs(v):
                if w not in seen:
                    seen.add(w)
                    comp.add(w)
                    stack.append(w)
        comps.append(frozenset(comp))
    return sorted(comps, key=min)


def segments(g: TopologyGraph, catalog: ModuleCatalog) -> list[frozenset]:
    """Connected components of the graph once gateway vertices are removed.

    Treated as an undirected skeleton; the component list is ordered by
    smallest member id.
    """
    kept = [vid for vid in g.vertex_ids if catalog.kind_of(g.label_of(vid)) != KIND_GATEWAY]
    kept_set = set(kept)

    def nbrs(v):
        return (w for w in g.neighbors(v) if w in kept_set)

    return _components(kept, nbrs)


def processing_vertices(g: TopologyGraph, catalog: ModuleCatalog) -> tuple[int, ...]:
    return tuple(
        vid for vid in g.vertex_ids if catalog.kind_of(g.label_of(vid)) == KIND_PROCESSING
    )


def processing_counts(g: TopologyGraph, catalog: ModuleCatalog) -> dict:
    out: dict[str, int] = {}
    for vid in g.vertex_ids:
        lab = g.label_of(vid)
        if catalog.kind_of(lab) == KIND_PROCESSING:
            out[lab] = out.get(lab, 0) + 1
    return out


def processing_mutually_reachable(g: TopologyGraph, catalog: ModuleCatalog) -> bool:
    """True when every processing vertex sits in one connected component."""
    procs = processing_vertices(g, catalog)
    if len(procs) <= 1:
        return True
    comps = _components(g.vertex_ids, g.neighbors)
    first = next(c for c in comps if procs[0] in c)
    return all(p in first for p in procs)


def structural_stats(g: TopologyGraph, catalog: ModuleCatalog) -> StructuralStats:
    type_counts: dict[str, int] = {}
    kind_counts: dict[str, int] = {}
    for vid in g.vertex_ids:
        lab = g.label_of(vid)
        kind = catalog.kind_of(lab)  # raises InputError on unknown labels
        type_counts[lab] = type_counts.get(lab, 0) + 1
        kind_counts[kind] = kind_counts.get(kind, 0) + 1
    return StructuralStats(
        type_counts=type_counts,
        kind_counts=kind_counts,
        n_vertices=g.n_vertices,
        n_links=g.n_links,
        n_directed_edges=g.n_directed_edges,
        n_segments=len(segments(g, catalog)),
    )
