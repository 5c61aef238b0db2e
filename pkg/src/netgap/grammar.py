"""Production-rule grammar DSL: parsing, classification, pretty-printing.

A grammar is a list of named production rules over labeled directed graphs::

    r0: phi => G;                             # creates a gateway
    r1: G[0-2] => G <-> S;                    # attaches a switch to the gateway
    r3: S_1[0-14], S_2[0-14] => S_1 <-> S_2;  # connects two unconnected switches

Lexical rules: a node is a type label (letters), an optional underscore
index to tell same-typed nodes apart, and an optional degree interval
``[lo-hi]`` (``[n]`` abbreviates ``[n-n]``; a comma separator is accepted
too).  ``A -> B`` is a directed edge, ``A <-> B`` both directions, and
chains like ``C_1 -> B -> C_2`` are allowed.  ``phi`` (or the glyph
aliases ``⇒ → ↔ φ``) names the empty side.  ``#`` starts a comment; a
comment trailing a rule on the same line is kept with that rule.

Rewrite semantics are positional by (label, index) correspondence: nodes
and edges on the left that have no counterpart on the right are removed,
counterparts on the right only are added.  The one exception is a rule
whose sides are both a single bare node, which relabels the matched node
in place instead of replacing it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator

from .errors import GrammarParseError, InputError

Key = tuple  # (label, index | None)


def key_sort(key: Key):
    label, index = key
    return (label, -1 if index is None else index)


def key_str(key: Key) -> str:
    label, index = key
    return label if index is None else f"{label}_{index}"


@dataclass(frozen=True)
class NodePattern:
    label: str
    index: int | None = None
    interval: tuple[int, int] | None = None

    @property
    def key(self) -> Key:
        return (self.label, self.index)


@dataclass(frozen=True)
class RuleSide:
    """Canonicalized side of a production: sorted nodes and directed edges."""

    nodes: tuple[NodePattern, ...]
    edges: tuple[tuple[Key, Key], ...]

    @classmethod
    def build(cls, nodes: dict, edges: set) -> "RuleSide":
        ordered = tuple(sorted(nodes.values(), key=lambda n: key_sort(n.key)))
        return cls(ordered, tuple(sorted(edges, key=lambda e: (key_sort(e[0]), key_sort(e[1])))))

    @property
    def keys(self) -> tuple[Key, ...]:
        return tuple(n.key for n in self.nodes)

    def node(self, key: Key) -> NodePattern:
        for n in self.nodes:
            if n.key == key:
                return n
        raise KeyError(key)

    @property
    def is_empty(self) -> bool:
        return not self.nodes


@dataclass(frozen=True)
class RuleEffect:
    """Structural summary of what applying a rule does."""

    added_nodes: tuple[Key, ...]
    deleted_nodes: tuple[Key, ...]
    relabel: tuple[str, str] | None
    added_edges: tuple[tuple[Key, Key], ...]
    deleted_edges: tuple[tuple[Key, Key], ...]
    degree_conditions: tuple[tuple[Key, tuple[int, int]], ...]
    requires_absent_edges: tuple[tuple[Key, Key], ...]

    @property
    def creates_from_empty(self) -> bool:
        return bool(self.added_nodes) and not self.deleted_nodes and not self.degree_conditions


@dataclass(frozen=True)
class ProductionRule:
    name: str
    lhs: RuleSide
    rhs: RuleSide
    comment: str | None = None

    def __post_init__(self):
        if self.lhs.is_empty and self.rhs.is_empty:
            raise InputError(f"rule {self.name!r}: both sides are empty")
        for side in (self.lhs, self.rhs):
            for u, v in side.edges:
                if u == v:
                    raise InputError(f"rule {self.name!r}: self-edge on {key_str(u)}")

    @property
    def is_relabel(self) -> bool:
        return (
            len(self.lhs.nodes) == 1
            and len(self.rhs.nodes) == 1
            and not self.lhs.edges
            and not self.rhs.edges
        )

    @property
    def preserved_keys(self) -> tuple[Key, ...]:
        if self.is_relabel:
            return (self.lhs.nodes[0].key,)
        rhs = set(self.rhs.keys)
        return tuple(k for k in self.lhs.keys if k in rhs)


def classify_rule(rule: ProductionRule) -> RuleEffect:
    degree_conditions = tuple(
        (n.key, n.interval) for n in rule.lhs.nodes if n.interval is not None
    )
    if rule.is_relabel:
        old, new = rule.lhs.nodes[0].label, rule.rhs.nodes[0].label
        return RuleEffect((), (), (old, new) if old != new else None, (), (), degree_conditions, ())
    lhs_keys, rhs_keys = set(rule.lhs.keys), set(rule.rhs.keys)
    added_nodes = tuple(k for k in rule.rhs.keys if k not in lhs_keys)
    deleted_nodes = tuple(k for k in rule.lhs.keys if k not in rhs_keys)
    lhs_edges, rhs_edges = set(rule.lhs.edges), set(rule.rhs.edges)
    added_edges = tuple(e for e in rule.rhs.edges if e not in lhs_edges)
    deleted_edges = tuple(e for e in rule.lhs.edges if e not in rhs_edges)
    preserved = lhs_keys & rhs_keys
    requires_absent = tuple(
        (u, v) for u, v in added_edges if u in preserved and v in preserved
    )
    return RuleEffect(
        added_nodes, deleted_nodes, None, added_edges, deleted_edges,
        degree_conditions, requires_absent,
    )


class Grammar:
    def __init__(self, rules):
        self.rules: tuple[ProductionRule, ...] = tuple(rules)
        self._by_name: dict[str, ProductionRule] = {}
        for r in self.rules:
            if r.name in self._by_name:
                raise InputError(f"duplicate rule name {r.name!r}")
            self._by_name[r.name] = r
        if not self.rules:
            raise InputError("grammar has no rules")

    def rule(self, name: str) -> ProductionRule:
        try:
            return self._by_name[name]
        except KeyError:
            raise InputError(f"unknown rule {name!r}") from None

    def __iter__(self) -> Iterator[ProductionRule]:
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def __eq__(self, other):
        return isinstance(other, Grammar) and self.rules == other.rules


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)"
    r"|(?P<comment>#[^\n]*)"
    r"|(?P<nl>\n)"
    r"|(?P<bi><->|↔)"
    r"|(?P<dir>->|→)"
    r"|(?P<imp>=>|⇒)"
    r"|(?P<ident>[A-Za-z][A-Za-z0-9_]*|φ)"
    r"|(?P<int>[0-9]+)"
    r"|(?P<sym>[:\[\],;\-])"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise GrammarParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        raw = m.group()
        if kind == "nl":
            tokens.append(_Token("nl", raw, line, col))
            line += 1
            col = 1
        else:
            if kind != "ws":
                tokens.append(_Token(kind, raw, line, col))
            col += len(raw)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = [t for t in _tokenize(text)]
        self.pos = 0

    def _peek(self, skip_nl: bool = True) -> _Token:
        i = self.pos
        while skip_nl and self.tokens[i].kind in ("nl", "comment"):
            i += 1
        return self.tokens[i]

    def _next(self, skip_nl: bool = True) -> _Token:
        while skip_nl and self.tokens[self.pos].kind in ("nl", "comment"):
            self.pos += 1
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def _expect(self, kind: str, what: str) -> _Token:
        tok = self._next()
        if tok.kind != kind and not (kind == "sym" and tok.kind == "sym"):
            raise GrammarParseError(f"expected {what}, found {tok.text!r}", tok.line, tok.col)
        return tok

    def _expect_sym(self, text: str) -> _Token:
        tok = self._next()
        if tok.kind != "sym" or tok.text != text:
            raise GrammarParseError(f"expected {text!r}, found {tok.text!r}", tok.line, tok.col)
        return tok

    def parse(self) -> Grammar:
        rules = []
        while self._peek().kind != "eof":
            rules.append(self._rule())
        if not rules:
            raise GrammarParseError("grammar has no rules", 1, 1)
        return Grammar(rules)

    def _rule(self) -> ProductionRule:
        name_tok = self._next()
        if name_tok.kind != "ident":
            raise GrammarParseError(f"expected rule name, found {name_tok.text!r}", name_tok.line, name_tok.col)
        self._expect_sym(":")
        lhs = self._side()
        imp = self._next()
        if imp.kind != "imp":
            raise GrammarParseError(f"expected '=>', found {imp.text!r}", imp.line, imp.col)
        rhs = self._side()
        semi = self._next()
        if semi.kind != "sym" or semi.text != ";":
            raise GrammarParseError(f"expected ';', found {semi.text!r}", semi.line, semi.col)
        comment = None
        nxt = self.tokens[self.pos] if self.pos < len(self.tokens) else None
        if nxt is not None and nxt.kind == "comment" and nxt.line == semi.line:
            comment = nxt.text.lstrip("#").strip()
            self.pos += 1
        try:
            return ProductionRule(name_tok.text, lhs, rhs, comment)
        except InputError as exc:
            raise GrammarParseError(str(exc), name_tok.line, name_tok.col) from None

    def _side(self) -> RuleSide:
        nodes: dict[Key, NodePattern] = {}
        edges: set[tuple[Key, Key]] = set()
        saw_phi = False
        while True:
            saw_phi |= self._struct(nodes, edges)
            if self._peek().kind == "sym" and self._peek().text == ",":
                self._next()
                continue
            break
        if saw_phi and (nodes or edges):
            tok = self._peek()
            raise GrammarParseError("phi cannot be combined with other structures", tok.line, tok.col)
        return RuleSide.build(nodes, edges)

    def _struct(self, nodes: dict, edges: set) -> bool:
        """Parse one struct (a node or an edge chain); returns True for phi."""
        first = self._node_or_phi(nodes)
        if first is None:
            return True
        prev = first
        while self._peek().kind in ("dir", "bi"):
            arrow = self._next()
            nxt = self._node_or_phi(nodes)
            if nxt is None:
                raise GrammarParseError("phi cannot appear in an edge", arrow.line, arrow.col)
            if nxt == prev:
                raise GrammarParseError(f"self-edge on {key_str(prev)}", arrow.line, arrow.col)
            edges.add((prev, nxt))
            if arrow.kind == "bi":
                edges.add((nxt, prev))
            prev = nxt
        return False

    def _node_or_phi(self, nodes: dict) -> Key | None:
        tok = self._next()
        if tok.kind != "ident":
            raise GrammarParseError(f"expected node, found {tok.text!r}", tok.line, tok.col)
        if tok.text in ("phi", "φ"):
            return None
        label, index = tok.text, None
        if "_" in tok.text:
            label, _, suffix = tok.text.partition("_")
            if not suffix.isdigit():
                raise GrammarParseError(f"node index must be numeric in {tok.text!r}", tok.line, tok.col)
            index = int(suffix)
        if not label.isalpha():
            raise GrammarParseError(f"type label must be alphabetic in {tok.text!r}", tok.line, tok.col)
        interval = None
        nxt = self._peek(skip_nl=False)
        if nxt.kind == "sym" and nxt.text == "[":
            interval = self._interval()
        key = (label, index)
        pattern = NodePattern(label, index, interval)
        existing = nodes.get(key)
        if existing is None:
            nodes[key] = pattern
        elif interval is not None:
            if existing.interval is not None and existing.interval != interval:
                raise GrammarParseError(
                    f"conflicting degree intervals on {key_str(key)}", tok.line, tok.col
                )
            nodes[key] = pattern
        return key

    def _interval(self) -> tuple[int, int]:
        self._expect_sym("[")
        lo_tok = self._next()
        if lo_tok.kind != "int":
            raise GrammarParseError(f"expected number, found {lo_tok.text!r}", lo_tok.line, lo_tok.col)
        lo = int(lo_tok.text)
        hi = lo
        sep = self._next()
        if sep.kind == "sym" and sep.text in ("-", ","):
            hi_tok = self._next()
            if hi_tok.kind != "int":
                raise GrammarParseError(f"expected number, found {hi_tok.text!r}", hi_tok.line, hi_tok.col)
            hi = int(hi_tok.text)
            sep = self._next()
        if sep.kind != "sym" or sep.text != "]":
            raise GrammarParseError(f"expected ']', found {sep.text!r}", sep.line, sep.col)
        if hi < lo:
            raise GrammarParseError(f"empty degree interval [{lo}-{hi}]", lo_tok.line, lo_tok.col)
        return (lo, hi)


def parse_grammar(text: str) -> Grammar:
    return _Parser(text).parse()


def load_grammar(path) -> Grammar:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_grammar(fh.read())


# ---------------------------------------------------------------------------
# Pretty-printing
# ---------------------------------------------------------------------------

def _render_node(side: RuleSide, key: Key, seen: set) -> str:
    text = key_str(key)
    if key not in seen:
        seen.add(key)
        interval = side.node(key).interval
        if interval is not None:
            lo, hi = interval
            text += f"[{lo}]" if lo == hi else f"[{lo}-{hi}]"
    return text


def _render_side(side: RuleSide) -> str:
    if side.is_empty:
        return "phi"
    edges = set(side.edges)
    bi, directed = [], []
    for u, v in sorted(edges, key=lambda e: (key_sort(e[0]), key_sort(e[1]))):
        if (v, u) in edges and key_sort(u) < key_sort(v):
            bi.append((u, v))
        elif (v, u) not in edges:
            directed.append((u, v))
    in_edges = {k for e in edges for k in e}
    seen: set = set()
    parts = [
        _render_node(side, n.key, seen)
        for n in side.nodes
        if n.key not in in_edges
    ]
    parts += [f"{_render_node(side, u, seen)} <-> {_render_node(side, v, seen)}" for u, v in bi]
    parts += [f"{_render_node(side, u, seen)} -> {_render_node(side, v, seen)}" for u, v in directed]
    return ", ".join(parts)


def pretty_print(grammar: Grammar) -> str:
    lines = []
    for rule in grammar.rules:
        line = f"{rule.name}: {_render_side(rule.lhs)} => {_render_side(rule.rhs)};"
        if rule.comment:
            line += f"  # {rule.comment}"
        lines.append(line)
    return "\n".join(lines) + "\n"
