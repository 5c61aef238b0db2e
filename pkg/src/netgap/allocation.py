"""Process-to-module allocation (SP1).

Chooses which processing modules to include and assigns every process to
one, minimizing module cost first and balancing load second.  Candidate
modules are a fixed pool of q slots cycling through the catalog's
processing types; with a single processing type the pool is homogeneous.

The genome has two parts: a boolean inclusion vector over slots (the y_j)
and an integer assignment vector over processes (encoding the x_ij).
Constraint handling is by penalty: any violation magnitude is weighted
heavily enough that a feasible genome always beats an infeasible one.
Crossover and mutation operate on each part independently and repair the
assignment part so it only ever points at included slots.

Messages between processes that share a module consume no interface
bandwidth (the z-terms of the bandwidth constraints).  Processes of
different parts must not share a module; that separation is counted as a
hard violation here because allocation is where co-residency is decided.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig, Sp1Config
from .errors import InfeasibleModelError, InputError
from .model import ApplicationModel, ModuleCatalog, ModuleSpec


@dataclass(frozen=True)
class AllocationGenome:
    inclusion: np.ndarray  # (q,) bool, y_j
    assignment: np.ndarray  # (m,) int64, process ordinal -> slot index

    def __post_init__(self):
        object.__setattr__(self, "inclusion", np.asarray(self.inclusion, dtype=bool))
        object.__setattr__(self, "assignment", np.asarray(self.assignment, dtype=np.int64))
        if self.inclusion.ndim != 1 or self.assignment.ndim != 1:
            raise InputError("genome parts must be one-dimensional")

    @property
    def n_slots(self) -> int:
        return int(self.inclusion.shape[0])


@dataclass(frozen=True)
class Violation:
    kind: str  # excluded_slot | compute | bandwidth_out | bandwidth_in | part_mixing
    slot: int | None
    magnitude: float


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    violations: tuple[Violation, ...]

    @property
    def total_magnitude(self) -> float:
        return float(sum(v.magnitude for v in self.violations))


def slot_module_types(catalog: ModuleCatalog, n_slots: int) -> list[str]:
    """Type name of each candidate slot: processing types, cycled."""
    names = [t.type_name for t in catalog.processing_types]
    return [names[j % len(names)] for j in range(n_slots)]


class _Instance:
    """Array form of one allocation problem.

    Message endpoints of -1 mean "hosted elsewhere": the bandwidth always
    hits the local module's interface and never cancels via co-location.
    """

    def __init__(self, demands, parts, msg_src, msg_dst, msg_bw, specs, scale=1.0):
        self.r = np.asarray(demands, dtype=np.float64)
        self.part_idx = np.asarray(parts, dtype=np.int64)
        self.n_parts = int(self.part_idx.max()) + 1 if self.part_idx.size else 0
        self.msg_src = np.asarray(msg_src, dtype=np.int64)
        self.msg_dst = np.asarray(msg_dst, dtype=np.int64)
        self.msg_bw = np.asarray(msg_bw, dtype=np.float64)
        self.specs: list[ModuleSpec] = list(specs)
        self.q = len(self.specs)
        self.m = int(self.r.shape[0])
        self.w = np.asarray([s.compute_capacity_mops for s in self.specs]) * scale
        self.v_out = np.asarray([s.link_bandwidth_mbps for s in self.specs]) * scale
        self.v_in = np.asarray([s.link_bandwidth_mbps for s in self.specs]) * scale
        self.cost = np.asarray([s.cost_units for s in self.specs], dtype=np.float64)

    @classmethod
    def from_model(cls, model: ApplicationModel, catalog: ModuleCatalog, n_slots: int,
                   scale: float = 1.0) -> "_Instance":
        pidx = {p.id: i for i, p in enumerate(model.processes)}
        part_ordinal = {part: i for i, part in enumerate(model.parts)}
        specs = [catalog.spec(t) for t in slot_module_types(catalog, n_slots)]
        return cls(
            [p.compute_mops for p in model.processes],
            [part_ordinal[p.part] for p in model.processes],
            [pidx[msg.src] for msg in model.messages],
            [pidx[msg.dst] for msg in model.messages],
            [msg.bandwidth_mbps for msg in model.messages],
            specs,
            scale,
        )

    # -- population-wide accounting, all (B, q) arrays -----------------------

    def loads(self, assignment: np.ndarray):
        """Per-slot compute, out-bandwidth and in-bandwidth loads."""
        B = assignment.shape[0]
        base = np.arange(B, dtype=np.int64)[:, None] * self.q
        compute = np.bincount(
            (base + assignment).ravel(),
            weights=np.broadcast_to(self.r, (B, self.m)).ravel(),
            minlength=B * self.q,
        ).reshape(B, self.q)
        if self.msg_bw.size:
            src_ext = self.msg_src < 0
            dst_ext = self.msg_dst < 0
            src_slot = assignment[:, np.where(src_ext, 0, self.msg_src)]
            dst_slot = assignment[:, np.where(dst_ext, 0, self.msg_dst)]
            # co-located pairs exchange messages for free
            crosses = (src_slot != dst_slot) | src_ext | dst_ext
            w_out = np.where(crosses & ~src_ext, self.msg_bw, 0.0)
            w_in = np.where(crosses & ~dst_ext, self.msg_bw, 0.0)
            out = np.bincount((base + src_slot).ravel(), weights=w_out.ravel(),
                              minlength=B * self.q).reshape(B, self.q)
            into = np.bincount((base + dst_slot).ravel(), weights=w_in.ravel(),
                               minlength=B * self.q).reshape(B, self.q)
        else:
            out = np.zeros((B, self.q))
            into = np.zeros((B, self.q))
        return compute, out, into

    def violation_terms(self, inclusion: np.ndarray, assignment: np.ndarray):
        """Per-genome (B,) violation magnitudes, split by constraint family."""
        B = assignment.shape[0]
        compute, out, into = self.loads(assignment)
        excluded = (~np.take_along_axis(inclusion, assignment, axis=1)).sum(axis=1)
        over_c = np.clip(compute - self.w, 0.0, None).sum(axis=1)
        over_out = np.clip(out - self.v_out, 0.0, None).sum(axis=1)
        over_in = np.clip(into - self.v_in, 0.0, None).sum(axis=1)
        if self.n_parts > 1:
            base = np.arange(B, dtype=np.int64)[:, None] * (self.q * self.n_parts)
            flat = base + assignment * self.n_parts + self.part_idx
            present = np.bincount(flat.ravel(), minlength=B * self.q * self.n_parts)
            distinct = (present.reshape(B, self.q, self.n_parts) > 0).sum(axis=2)
            mixing = np.clip(distinct - 1, 0, None).sum(axis=1).astype(np.float64)
        else:
            mixing = np.zeros(B)
        return excluded.astype(np.float64), over_c, over_out, over_in, mixing

    def total_violation(self, inclusion, assignment) -> np.ndarray:
        return sum(self.violation_terms(inclusion, assignment))

    def primary_scores(self, inclusion, assignment, lam) -> np.ndarray:
        cost = inclusion @ self.cost
        return cost + lam * self.total_violation(inclusion, assignment)

    def secondary_scores(self, inclusion, assignment, lam) -> np.ndarray:
        compute, _, _ = self.loads(assignment)
        with np.errstate(invalid="ignore", divide="ignore"):
            util = compute / self.w
        n_inc = inclusion.sum(axis=1)
        n_safe = np.maximum(n_inc, 1)
        mean = (util * inclusion).sum(axis=1) / n_safe
        var = (((util - mean[:, None]) ** 2) * inclusion).sum(axis=1) / n_safe
        return var + lam * self.total_violation(inclusion, assignment)


def _detailed_violations(inst: _Instance, genome: AllocationGenome) -> tuple[Violation, ...]:
    compute, out, into = (a[0] for a in inst.loads(genome.assignment[None, :]))
    violations: list[Violation] = []
    for i in np.flatnonzero(~genome.inclusion[genome.assignment]):
        violations.append(Violation("excluded_slot", int(genome.assignment[i]), 1.0))
    for arrays, kind, cap in ((compute, "compute", inst.w),
                              (out, "bandwidth_out", inst.v_out),
                              (into, "bandwidth_in", inst.v_in)):
        over = arrays - cap
        for j in np.flatnonzero(over > 1e-12):
            violations.append(Violation(kind, int(j), float(over[j])))
    if inst.n_parts > 1:
        for j in range(inst.q):
            parts_here = set(inst.part_idx[genome.assignment == j].tolist())
            if len(parts_here) > 1:
                violations.append(Violation("part_mixing", j, float(len(parts_here) - 1)))
    return tuple(violations)


def check_feasibility(genome: AllocationGenome, model: ApplicationModel,
                      catalog: ModuleCatalog) -> FeasibilityResult:
    """Check Eqs. (1)-(9) against raw catalog capacities, with magnitudes.

    Assignment encoding satisfies the one-module-per-process constraint by
    construction; everything else is measured and reported per slot.
    """
    inst = _Instance.from_model(model, catalog, genome.n_slots)
    if genome.assignment.shape[0] != inst.m:
        raise InputError(
            f"assignment length {genome.assignment.shape[0]} does not match "
            f"{inst.m} processes"
        )
    if inst.m and not ((genome.assignment >= 0) & (genome.assignment < inst.q)).all():
        raise InputError("assignment entry out of slot range")
    violations = _detailed_violations(inst, genome)
    return FeasibilityResult(not violations, violations)


def fitness(genome: AllocationGenome, model: ApplicationModel, catalog: ModuleCatalog,
            phase: str = "primary", penalty_weight: float | None = None) -> float:
    """Penalized GA objective, lower is better.

    Primary phase: included-module cost.  Secondary phase: variance of the
    included slots' compute-utilization fractions.  penalty_weight defaults
    to 10x the whole slot pool's cost so feasibility dominates cost.
    """
    if phase not in ("primary", "secondary"):
        raise InputError(f"unknown fitness phase {phase!r}")
    inst = _Instance.from_model(model, catalog, genome.n_slots)
    lam = float(penalty_weight) if penalty_weight is not None else 10.0 * inst.cost.sum()
    incl = genome.inclusion[None, :]
    assign = genome.assignment[None, :]
    if phase == "primary":
        return float(inst.primary_scores(incl, assign, lam)[0])
    return float(inst.secondary_scores(incl, assign, lam)[0])


# ---------------------------------------------------------------------------
# GA machinery (population arrays throughout)
# ---------------------------------------------------------------------------

def _random_included_slots(inclusion: np.ndarray, rows: np.ndarray,
                           rng: np.random.Generator) -> np.ndarray:
    """For each listed row, one uniformly random included slot of that row."""
    counts = inclusion[rows].sum(axis=1)
    picks = rng.integers(0, counts)  # counts >= 1 guaranteed by callers
    cum = np.cumsum(inclusion[rows], axis=1)
    return np.argmax(cum == (picks + 1)[:, None], axis=1)


def _ensure_nonempty(inclusion: np.ndarray, rng: np.random.Generator) -> None:
    empty = np.flatnonzero(~inclusion.any(axis=1))
    if empty.size:
        inclusion[empty, rng.integers(0, inclusion.shape[1], size=empty.size)] = True


def _repair(inclusion: np.ndarray, assignment: np.ndarray, donor: np.ndarray | None,
            rng: np.random.Generator) -> np.ndarray:
    """Point every assignment gene at an included slot.

    Invalid genes inherit the donor's gene when that one is valid, else a
    random included slot of the same genome.
    """
    valid = np.take_along_axis(inclusion, assignment, axis=1)
    out = assignment.copy()
    if donor is not None:
        donor_ok = np.take_along_axis(inclusion, donor, axis=1)
        use_donor = ~valid & donor_ok
        out[use_donor] = donor[use_donor]
        valid = valid | donor_ok
    bad_rows, bad_cols = np.nonzero(~valid)
    if bad_rows.size:
        out[bad_rows, bad_cols] = _random_included_slots(inclusion, bad_rows, rng)
    return out


def _two_point_mask(n_genes: int, n_rows: int, rng: np.random.Generator) -> np.ndarray:
    pts = np.sort(rng.integers(0, n_genes + 1, size=(n_rows, 2)), axis=1)
    idx = np.arange(n_genes)
    return (idx >= pts[:, :1]) & (idx < pts[:, 1:])


def _tournament(scores: np.ndarray, n_picks: int, k: int,
                rng: np.random.Generator) -> np.ndarray:
    entrants = rng.integers(0, scores.shape[0], size=(n_picks, k))
    return entrants[np.arange(n_picks), scores[entrants].argmin(axis=1)]


def _ffd_seed(inst: _Instance) -> tuple[np.ndarray, np.ndarray]:
    """First-fit-decreasing over compute, one part per slot, as a GA seed."""
    inclusion = np.zeros(inst.q, dtype=bool)
    assignment = np.zeros(inst.m, dtype=np.int64)
    remaining = inst.w.copy()
    slot_part = np.full(inst.q, -1, dtype=np.int64)
    order = np.argsort(-inst.r, kind="stable")
    for i in order:
        placed = False
        for j in range(inst.q):
            if slot_part[j] not in (-1, inst.part_idx[i]):
                continue
            if inst.r[i] <= remaining[j] + 1e-12:
                assignment[i] = j
                remaining[j] -= inst.r[i]
                slot_part[j] = inst.part_idx[i]
                inclusion[j] = True
                placed = True
                break
        if not placed:  # nothing fits; leave the violation to the GA
            assignment[i] = 0
            inclusion[0] = True
    return inclusion, assignment


class _GaRun:
    def __init__(self, inst: _Instance, cfg: Sp1Config, rng: np.random.Generator):
        self.inst = inst
        self.cfg = cfg
        self.rng = rng
        self.lam = cfg.penalty_factor * float(inst.cost.sum())
        pop = cfg.population_size
        self.inclusion = rng.random((pop, inst.q)) < 0.5
        _ensure_nonempty(self.inclusion, rng)
        self.assignment = _repair(
            self.inclusion,
            rng.integers(0, inst.q, size=(pop, inst.m)),
            None,
            rng,
        )
        seed_inc, seed_asg = _ffd_seed(inst)
        self.inclusion[0] = seed_inc
        self.assignment[0] = seed_asg

    def _scores(self, phase: str) -> np.ndarray:
        if phase == "primary":
            return self.inst.primary_scores(self.inclusion, self.assignment, self.lam)
        return self.inst.secondary_scores(self.inclusion, self.assignment, self.lam)

    def evolve(self, phase: str, freeze_inclusion: bool) -> None:
        cfg, rng, inst = self.cfg, self.rng, self.inst
        pop = cfg.population_size
        n_children = pop - cfg.elite_count
        for _ in range(cfg.max_generations):
            scores = self._scores(phase)
            elites = np.argsort(scores, kind="stable")[: cfg.elite_count]
            pa = _tournament(scores, n_children, cfg.tournament_size, rng)
            pb = _tournament(scores, n_children, cfg.tournament_size, rng)
            cross = rng.random(n_children) < cfg.crossover_rate
            if freeze_inclusion:
                child_inc = self.inclusion[pa].copy()
            else:
                mask1 = _two_point_mask(inst.q, n_children, rng) & cross[:, None]
                child_inc = np.where(mask1, self.inclusion[pb], self.inclusion[pa])
            mask2 = _two_point_mask(inst.m, n_children, rng) & cross[:, None]
            child_asg = np.where(mask2, self.assignment[pb], self.assignment[pa])
            if not freeze_inclusion:
                flips = rng.random((n_children, inst.q)) < cfg.mutation_rate
                child_inc ^= flips
                _ensure_nonempty(child_inc, rng)
            child_asg = _repair(child_inc, child_asg, self.assignment[pa], rng)
            point = np.nonzero(rng.random((n_children, inst.m)) < cfg.mutation_rate)
            if point[0].size:
                child_asg[point] = _random_included_slots(child_inc, point[0], rng)
            self.inclusion = np.concatenate([self.inclusion[elites], child_inc])
            self.assignment = np.concatenate([self.assignment[elites], child_asg])

    def best(self, phase: str) -> tuple[np.ndarray, np.ndarray, float]:
        scores = self._scores(phase)
        i = int(np.argmin(scores))
        return self.inclusion[i].copy(), self.assignment[i].copy(), float(scores[i])


# ---------------------------------------------------------------------------
# Solution object
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AllocationSolution:
    genome: AllocationGenome
    slot_types: tuple[str, ...]  # type name per slot, includes excluded slots
    process_assignment: dict  # process id -> slot index
    compute_load: dict  # slot -> Mops
    bandwidth_out: dict  # slot -> Mbit/s
    bandwidth_in: dict  # slot -> Mbit/s
    inter_module_traffic: dict  # (src slot, dst slot) -> Mbit/s, cross-module only
    feasible: bool
    violations: tuple[Violation, ...] = ()

    @property
    def included_slots(self) -> tuple[int, ...]:
        return tuple(int(j) for j in np.flatnonzero(self.genome.inclusion))

    def included_modules(self, catalog: ModuleCatalog) -> list[tuple[int, ModuleSpec]]:
        return [(j, catalog.spec(self.slot_types[j])) for j in self.included_slots]

    @property
    def n_included(self) -> int:
        return len(self.included_slots)

    def module_cost(self, catalog: ModuleCatalog) -> float:
        return float(sum(catalog.spec(self.slot_types[j]).cost_units
                         for j in self.included_slots))

    @property
    def required_type_counts(self) -> dict:
        """Processing vertices a terminal topology must provide, per type."""
        out: dict[str, int] = {}
        for j in self.included_slots:
            out[self.slot_types[j]] = out.get(self.slot_types[j], 0) + 1
        return out

    def utilization(self, catalog: ModuleCatalog) -> dict:
        """Included slots' compute load as a fraction of raw capacity."""
        return {
            j: self.compute_load.get(j, 0.0) / catalog.spec(self.slot_types[j]).compute_capacity_mops
            for j in self.included_slots
        }

    def to_dict(self) -> dict:
        return {
            "n_slots": self.genome.n_slots,
            "slot_types": list(self.slot_types),
            "included": [int(j) for j in self.included_slots],
            "assignment": dict(sorted(self.process_assignment.items())),
            "compute_load": {str(k): v for k, v in sorted(self.compute_load.items())},
            "bandwidth_out": {str(k): v for k, v in sorted(self.bandwidth_out.items())},
            "bandwidth_in": {str(k): v for k, v in sorted(self.bandwidth_in.items())},
            "inter_module_traffic": [
                [int(a), int(b), bw] for (a, b), bw in sorted(self.inter_module_traffic.items())
            ],
            "feasible": self.feasible,
            "violations": [
                {"kind": v.kind, "slot": v.slot, "magnitude": v.magnitude}
                for v in self.violations
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AllocationSolution":
        try:
            n_slots = int(data["n_slots"])
            slot_types = tuple(data["slot_types"])
            included = set(int(j) for j in data["included"])
            assignment = {str(k): int(v) for k, v in data["assignment"].items()}
            inclusion = np.zeros(n_slots, dtype=bool)
            for j in included:
                inclusion[j] = True
            order = sorted(assignment)
            genome = AllocationGenome(inclusion, np.asarray([assignment[k] for k in order]))
            return cls(
                genome=genome,
                slot_types=slot_types,
                process_assignment=assignment,
                compute_load={int(k): float(v) for k, v in data["compute_load"].items()},
                bandwidth_out={int(k): float(v) for k, v in data["bandwidth_out"].items()},
                bandwidth_in={int(k): float(v) for k, v in data["bandwidth_in"].items()},
                inter_module_traffic={
                    (int(a), int(b)): float(bw) for a, b, bw in data["inter_module_traffic"]
                },
                feasible=bool(data["feasible"]),
                violations=tuple(
                    Violation(v["kind"], v["slot"], v["magnitude"])
                    for v in data.get("violations", ())
                ),
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise InputError(f"malformed allocation document: {exc}") from None


def save_allocation(solution: AllocationSolution, path) -> None:
    Path(path).write_text(
        json.dumps(solution.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_allocation(path) -> AllocationSolution:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from None
    return AllocationSolution.from_dict(data)


def _finalize(model: ApplicationModel, inst: _Instance, slot_types, inclusion,
              assignment) -> AllocationSolution:
    genome = AllocationGenome(inclusion, assignment)
    compute, out, into = (a[0] for a in inst.loads(assignment[None, :]))
    traffic: dict[tuple[int, int], float] = {}
    pidx = {p.id: i for i, p in enumerate(model.processes)}
    for msg in model.messages:
        a = int(assignment[pidx[msg.src]])
        b = int(assignment[pidx[msg.dst]])
        if a != b:
            traffic[(a, b)] = traffic.get((a, b), 0.0) + msg.bandwidth_mbps
    used = sorted(set(int(j) for j in assignment) | set(np.flatnonzero(inclusion).tolist()))
    return AllocationSolution(
        genome=genome,
        slot_types=tuple(slot_types),
        process_assignment={p.id: int(assignment[i]) for i, p in enumerate(model.processes)},
        compute_load={j: float(compute[j]) for j in used if compute[j] > 0},
        bandwidth_out={j: float(out[j]) for j in used if out[j] > 0},
        bandwidth_in={j: float(into[j]) for j in used if into[j] > 0},
        inter_module_traffic=traffic,
        feasible=True,  # caller overwrites
        violations=(),
    )


def _solve_arrays(inst: _Instance, cfg: Sp1Config, part_name: str,
                  rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    if inst.m == 0:
        return np.zeros(inst.q, dtype=bool), np.zeros(0, dtype=np.int64)
    total_demand = float(inst.r.sum())
    total_capacity = float(inst.w.sum())
    if total_demand > total_capacity + 1e-9:
        raise InfeasibleModelError(
            f"{part_name}: total compute demand {total_demand:.2f} Mops exceeds the "
            f"pool capacity {total_capacity:.2f} Mops over {inst.q} slots"
        )
    run = _GaRun(inst, cfg, rng)
    run.evolve("primary", freeze_inclusion=False)
    best_inc, _, _ = run.best("primary")
    # the balancing pass only ever shuffles processes within the chosen set
    run.inclusion[:] = best_inc
    run.assignment = _repair(run.inclusion, run.assignment, None, rng)
    run.evolve("secondary", freeze_inclusion=True)
    _, best_asg, _ = run.best("secondary")
    return best_inc, best_asg


def _split_slots(model: ApplicationModel, n_slots: int) -> dict:
    """Slot counts per part, proportional to compute demand, each >= 1."""
    parts = model.parts
    if n_slots < len(parts):
        raise InfeasibleModelError(
            f"{n_slots} slots cannot cover {len(parts)} separated parts"
        )
    demand = np.asarray([
        sum(p.compute_mops for p in model.processes_of_part(part)) for part in parts
    ])
    raw = demand / demand.sum() * (n_slots - len(parts))
    counts = np.floor(raw).astype(int)
    remainder = raw - counts
    for i in np.argsort(-remainder, kind="stable")[: n_slots - len(parts) - counts.sum()]:
        counts[i] += 1
    return {part: int(c) + 1 for part, c in zip(parts, counts)}


def solve_sp1(model: ApplicationModel, catalog: ModuleCatalog, config: RunConfig,
              seed: int | None = None) -> AllocationSolution:
    """Two-phase GA: minimize module cost, then balance compute load.

    The second phase keeps the first phase's inclusion vector frozen, so
    the module set and its cost never change after phase one.  Capacities
    are tightened by the overload threshold when the config says so, which
    makes the returned allocation respect the utilization ceiling without
    a separate constraint.
    """
    config.validate()
    cfg = config.sp1
    if seed is None:
        seed = config.rng_seed
    if not model.processes:
        raise InputError("application model has no processes")
    scale = config.overload_threshold if cfg.tighten_capacities else 1.0
    rng = np.random.default_rng(seed)
    slot_types = slot_module_types(catalog, cfg.candidate_module_slots)

    if cfg.per_part_runs and len(model.parts) > 1:
        shares = _split_slots(model, cfg.candidate_module_slots)
        pidx = {p.id: i for i, p in enumerate(model.processes)}
        inclusion = np.zeros(cfg.candidate_module_slots, dtype=bool)
        assignment = np.zeros(len(model.processes), dtype=np.int64)
        offset = 0
        for part in model.parts:
            q_part = shares[part]
            local = model.processes_of_part(part)
            local_idx = {p.id: i for i, p in enumerate(local)}
            msg_src, msg_dst, msg_bw = [], [], []
            for msg in model.messages:
                s = local_idx.get(msg.src, -1)
                d = local_idx.get(msg.dst, -1)
                if s < 0 and d < 0:
                    continue
                msg_src.append(s)
                msg_dst.append(d)
                msg_bw.append(msg.bandwidth_mbps)
            specs = [catalog.spec(slot_types[offset + j]) for j in range(q_part)]
            inst = _Instance([p.compute_mops for p in local], [0] * len(local),
                             msg_src, msg_dst, msg_bw, specs, scale)
            inc, asg = _solve_arrays(inst, cfg, f"part {part!r}", rng)
            inclusion[offset:offset + q_part] = inc
            for p in local:
                assignment[pidx[p.id]] = offset + asg[local_idx[p.id]]
            offset += q_part
    else:
        inst = _Instance.from_model(model, catalog, cfg.candidate_module_slots, scale)
        inclusion, assignment = _solve_arrays(inst, cfg, "model", rng)

    # feasibility is judged against the capacities the GA solved for
    inst_eff = _Instance.from_model(model, catalog, cfg.candidate_module_slots, scale)
    solution = _finalize(model, inst_eff, slot_types, inclusion, assignment)
    violations = _detailed_violations(inst_eff, solution.genome)
    if violations:
        return AllocationSolution(
            genome=solution.genome,
            slot_types=solution.slot_types,
            process_assignment=solution.process_assignment,
            compute_load=solution.compute_load,
            bandwidth_out=solution.bandwidth_out,
            bandwidth_in=solution.bandwidth_in,
            inter_module_traffic=solution.inter_module_traffic,
            feasible=False,
            violations=violations,
        )
    return solution
