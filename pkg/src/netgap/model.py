"""Application models, module catalogs and the synthetic use-case generator.

An application model is a set of periodic processes plus the periodic
messages exchanged between them.  Processes are tagged with the part of the
application they belong to; parts are independent (messages never cross a
part boundary) and may have to be isolated from each other on the platform.

A module catalog lists the hardware module types a platform can be built
from: processing modules that host processes, and infrastructure modules
(switches, gateways) that forward traffic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import InputError

KIND_PROCESSING = "processing"
KIND_SWITCH = "switch"
KIND_GATEWAY = "gateway"
KINDS = (KIND_PROCESSING, KIND_SWITCH, KIND_GATEWAY)


@dataclass(frozen=True)
class Process:
    id: str
    part: str
    period_ms: float
    compute_mops: float

    def __post_init__(self):
        if self.period_ms <= 0:
            raise InputError(f"process {self.id!r}: period must be positive")
        if self.compute_mops <= 0:
            raise InputError(f"process {self.id!r}: compute demand must be positive")


@dataclass(frozen=True)
class Message:
    id: str
    src: str
    dst: str
    size_bits: float
    period_ms: float

    def __post_init__(self):
        if self.period_ms <= 0:
            raise InputError(f"message {self.id!r}: period must be positive")
        if self.size_bits <= 0:
            raise InputError(f"message {self.id!r}: size must be positive")
        if self.src == self.dst:
            raise InputError(f"message {self.id!r}: src and dst must differ")

    @property
    def bandwidth_mbps(self) -> float:
        # size_bits/period_ms is kbit/s, so one more factor of 1000 gives Mbit/s.
        return self.size_bits / self.period_ms / 1000.0


class ApplicationModel:
    """Immutable set of processes and messages with id lookup."""

    def __init__(self, processes, messages):
        self.processes: tuple[Process, ...] = tuple(processes)
        self.messages: tuple[Message, ...] = tuple(messages)
        self._by_id: dict[str, Process] = {}
        for p in self.processes:
            if p.id in self._by_id:
                raise InputError(f"duplicate process id {p.id!r}")
            self._by_id[p.id] = p
        seen_msg = set()
        for m in self.messages:
            if m.id in seen_msg:
                raise InputError(f"duplicate message id {m.id!r}")
            seen_msg.add(m.id)
            for end in (m.src, m.dst):
                if end not in self._by_id:
                    raise InputError(f"message {m.id!r} references unknown process {end!r}")

    def process(self, pid: str) -> Process:
        return self._by_id[pid]

    @property
    def parts(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for p in self.processes:
            seen.setdefault(p.part, None)
        return tuple(seen)

    def part_of(self, pid: str) -> str:
        return self._by_id[pid].part

    def processes_of_part(self, part: str) -> tuple[Process, ...]:
        return tuple(p for p in self.processes if p.part == part)

    def total_compute_mops(self) -> float:
        return float(sum(p.compute_mops for p in self.processes))

    def __eq__(self, other):
        return (
            isinstance(other, ApplicationModel)
            and self.processes == other.processes
            and self.messages == other.messages
        )

    def __repr__(self):
        return f"ApplicationModel({len(self.processes)} processes, {len(self.messages)} messages)"


@dataclass(frozen=True)
class ModuleSpec:
    type_name: str
    kind: str
    compute_capacity_mops: float
    link_bandwidth_mbps: float
    max_ports: int
    duplex: str
    cost_units: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"module type {self.type_name!r}: unknown kind {self.kind!r}")
        if self.duplex not in ("full", "half"):
            raise InputError(f"module type {self.type_name!r}: duplex must be 'full' or 'half'")
        if self.link_bandwidth_mbps <= 0 or self.cost_units < 0 or self.max_ports < 1:
            raise InputError(f"module type {self.type_name!r}: invalid capacities")
        if self.kind == KIND_PROCESSING and self.compute_capacity_mops <= 0:
            raise InputError(f"module type {self.type_name!r}: processing capacity must be positive")


class ModuleCatalog:
    def __init__(self, types):
        self.types: tuple[ModuleSpec, ...] = tuple(types)
        self._by_name: dict[str, ModuleSpec] = {}
        for t in self.types:
            if t.type_name in self._by_name:
                raise InputError(f"duplicate module type {t.type_name!r}")
            self._by_name[t.type_name] = t
        if not any(t.kind == KIND_PROCESSING for t in self.types):
            raise InputError("catalog defines no processing module type")

    def __contains__(self, type_name: str) -> bool:
        return type_name in self._by_name

    def spec(self, type_name: str) -> ModuleSpec:
        try:
            return self._by_name[type_name]
        except KeyError:
            raise InputError(f"unknown module type {type_name!r}") from None

    def kind_of(self, type_name: str) -> str:
        return self.spec(type_name).kind

    @property
    def processing_types(self) -> tuple[ModuleSpec, ...]:
        return tuple(t for t in self.types if t.kind == KIND_PROCESSING)

    def __eq__(self, other):
        return isinstance(other, ModuleCatalog) and self.types == other.types


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def application_model_to_dict(model: ApplicationModel) -> dict:
    return {
        "processes": [
            {"id": p.id, "part": p.part, "period_ms": p.period_ms, "compute_mops": p.compute_mops}
            for p in model.processes
        ],
        "messages": [
            {"id": m.id, "src": m.src, "dst": m.dst, "size_bits": m.size_bits, "period_ms": m.period_ms}
            for m in model.messages
        ],
    }


def application_model_from_dict(data: Mapping) -> ApplicationModel:
    try:
        processes = [Process(**p) for p in data["processes"]]
        messages = [Message(**m) for m in data["messages"]]
    except KeyError as exc:
        raise InputError(f"application model is missing field {exc}") from None
    except TypeError as exc:
        raise InputError(f"malformed application model entry: {exc}") from None
    return ApplicationModel(processes, messages)


def load_application_model(path) -> ApplicationModel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from None
    return application_model_from_dict(data)


def save_application_model(model: ApplicationModel, path) -> None:
    Path(path).write_text(json.dumps(application_model_to_dict(model), indent=2) + "\n", encoding="utf-8")


def module_catalog_to_dict(catalog: ModuleCatalog) -> dict:
    return {
        "module_types": [
            {
                "type_name": t.type_name,
                "kind": t.kind,
                "compute_capacity_mops": t.compute_capacity_mops,
                "link_bandwidth_mbps": t.link_bandwidth_mbps,
                "max_ports": t.max_ports,
                "duplex": t.duplex,
                "cost_units": t.cost_units,
            }
            for t in catalog.types
        ]
    }


def module_catalog_from_dict(data: Mapping) -> ModuleCatalog:
    try:
        types = [ModuleSpec(**t) for t in data["module_types"]]
    except KeyError as exc:
        raise InputError(f"module catalog is missing field {exc}") from None
    except TypeError as exc:
        raise InputError(f"malformed module type entry: {exc}") from None
    return ModuleCatalog(types)


def load_module_catalog(path) -> ModuleCatalog:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from None
    return module_catalog_from_dict(data)


def save_module_catalog(catalog: ModuleCatalog, path) -> None:
    Path(path).write_text(json.dumps(module_catalog_to_dict(catalog), indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Synthetic use cases
# ---------------------------------------------------------------------------

PERIOD_RANGE_MS = (5.0, 200.0)
SIZE_RANGE_BITS = (64, 8192)
COMPUTE_RANGE_MOPS = (0.05, 0.85)


def _normalize_parts(n_processes: int, n_messages: int, parts: Mapping) -> list[tuple[str, int, int]]:
    """Resolve per-part process and message counts.

    Each part maps to either a process count, or a (process, message) count
    pair.  Message counts left open are split by largest remainder in
    proportion to the number of ordered process pairs the part offers.
    """
    if not parts:
        parts = {"APP": n_processes}
    entries: list[tuple[str, int, int | None]] = []
    for name, val in parts.items():
        if isinstance(val, int):
            entries.append((name, val, None))
        else:
            n_p, n_m = val
            entries.append((name, int(n_p), int(n_m)))
    if sum(e[1] for e in entries) != n_processes:
        raise InputError(
            f"part process counts sum to {sum(e[1] for e in entries)}, expected {n_processes}"
        )
    fixed = sum(e[2] for e in entries if e[2] is not None)
    if fixed > n_messages:
        raise InputError(f"explicit part message counts sum to {fixed} > {n_messages}")
    open_entries = [e for e in entries if e[2] is None]
    remaining = n_messages - fixed
    if not open_entries:
        if remaining:
            raise InputError(f"part message counts sum to {fixed}, expected {n_messages}")
        quotas: dict[str, int] = {}
    else:
        weights = [max(e[1] * (e[1] - 1), 0) for e in open_entries]
        total_w = sum(weights)
        if total_w == 0:
            if remaining:
                raise InputError("messages requested but no part has two processes")
            quotas = {e[0]: 0 for e in open_entries}
        else:
            raw = [remaining * w / total_w for w in weights]
            base = [int(math.floor(r)) for r in raw]
            short = remaining - sum(base)
            order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - base[i]), i))
            for i in order[:short]:
                base[i] += 1
            quotas = {open_entries[i][0]: base[i] for i in range(len(open_entries))}
    out = []
    for name, n_p, n_m in entries:
        n_m = quotas[name] if n_m is None else n_m
        if n_p < 2 and n_m > 0:
            raise InputError(f"part {name!r} has {n_p} process(es) but {n_m} messages")
        out.append((name, n_p, n_m))
    return out


def generate_synthetic_usecase(
    n_processes: int,
    n_messages: int,
    parts: Mapping,
    seed: int,
) -> ApplicationModel:
    """Generate a random application model with part-internal traffic.

    Periods are log-uniform in [5, 200] ms, message sizes uniform in
    [64, 8192] bits and per-process compute demand uniform in
    [0.05, 0.85] Mops.  The communication graph of each part is grown by
    preferential attachment: endpoints are drawn with probability
    proportional to (degree + 1), which concentrates traffic on a few
    chatty processes the way fielded control applications do.
    """
    specs = _normalize_parts(n_processes, n_messages, parts)
    rng = np.random.default_rng(seed)
    lo_p, hi_p = PERIOD_RANGE_MS
    processes: list[Process] = []
    messages: list[Message] = []
    for name, n_p, n_m in specs:
        ids = [f"{name}_p{i:03d}" for i in range(n_p)]
        for pid in ids:
            period = float(np.exp(rng.uniform(np.log(lo_p), np.log(hi_p))))
            demand = float(rng.uniform(*COMPUTE_RANGE_MOPS))
            processes.append(Process(pid, name, period, demand))
        degree = np.zeros(n_p, dtype=np.float64)
        for j in range(n_m):
            w = degree + 1.0
            src = int(rng.choice(n_p, p=w / w.sum()))
            w_dst = w.copy()
            w_dst[src] = 0.0
            dst = int(rng.choice(n_p, p=w_dst / w_dst.sum()))
            degree[src] += 1
            degree[dst] += 1
            size = int(rng.integers(SIZE_RANGE_BITS[0], SIZE_RANGE_BITS[1] + 1))
            period = float(np.exp(rng.uniform(np.log(lo_p), np.log(hi_p))))
            messages.append(Message(f"{name}_m{j:04d}", ids[src], ids[dst], size, period))
    return ApplicationModel(processes, messages)
