"""Run configuration with the reference parameter set as defaults."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Mapping

from .errors import InputError


@dataclass
class Sp1Config:
    population_size: int = 400
    max_generations: int = 200          # applied to each of the two fitness phases
    candidate_module_slots: int = 30
    tournament_size: int = 3
    elite_count: int = 2
    crossover_rate: float = 0.9
    mutation_rate: float = 0.02         # per-gene flip/reassign probability
    tighten_capacities: bool = True     # scale capacities by overload_threshold up front
    per_part_runs: bool = False         # solve each part on its own slot range
    penalty_factor: float = 10.0        # lambda = penalty_factor * total slot cost


@dataclass
class Sp2Config:
    max_epochs: int = 10000
    parallel_rollouts: int = 1          # >1 trades determinism for throughput
    uct_c: float = 2.8
    rollout_depth_cap: int | None = None  # None: 4 * 2 * required module count
    max_untried_actions: int = 256
    log_every: int = 100


@dataclass
class Sp3Config:
    population_size: int = 50
    max_generations: int = 3
    tournament_size: int = 3
    elite_count: int = 1
    mutation_rate: float = 0.3          # per-child scramble probability


@dataclass
class RunConfig:
    sp1: Sp1Config = field(default_factory=Sp1Config)
    sp2: Sp2Config = field(default_factory=Sp2Config)
    sp3: Sp3Config = field(default_factory=Sp3Config)
    alpha: float = 1.0                  # link-load weight in the latency score
    beta: float = 1.0                   # overload-count weight in the latency score
    gamma: float = 1.0                  # hop weight in the latency score
    overload_threshold: float = 0.80
    required_disjoint_paths: int = 2
    required_segments: int = 2
    weight_latency: float = 1.0         # reward weights are normalized by their sum
    weight_cost: float = 1.0
    weight_resilience: float = 1.0
    link_cost_units: float = 0.1
    rng_seed: int = 1

    def validate(self) -> None:
        if self.gamma <= 0:
            raise InputError("gamma must be positive")
        if not (0.0 < self.overload_threshold <= 1.0):
            raise InputError("overload_threshold must be in (0, 1]")
        if self.required_disjoint_paths < 1 or self.required_segments < 1:
            raise InputError("required_disjoint_paths and required_segments must be >= 1")
        weights = (self.weight_latency, self.weight_cost, self.weight_resilience)
        if any(w < 0 for w in weights) or sum(weights) == 0:
            raise InputError("reward weights must be non-negative and not all zero")
        if self.link_cost_units < 0:
            raise InputError("link_cost_units must be non-negative")
        for name, sub in (("sp1", self.sp1), ("sp2", self.sp2), ("sp3", self.sp3)):
            for f in dataclasses.fields(sub):
                v = getattr(sub, f.name)
                if f.name.endswith(("size", "generations", "epochs", "slots", "count", "actions")) and v is not None:
                    if int(v) < (0 if f.name == "elite_count" else 1):
                        raise InputError(f"{name}.{f.name} must be positive")
        if self.sp2.uct_c < 0:
            raise InputError("sp2.uct_c must be non-negative")
        if self.sp1.tournament_size < 2 or self.sp3.tournament_size < 2:
            raise InputError("tournament size must be >= 2")


def config_to_dict(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)


def _apply(obj, data: Mapping, path: str) -> None:
    names = {f.name: f for f in dataclasses.fields(obj)}
    for key, val in data.items():
        if key not in names:
            raise InputError(f"unknown config key {path}{key!r}")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current):
            if not isinstance(val, Mapping):
                raise InputError(f"config key {path}{key!r} expects a mapping")
            _apply(current, val, f"{path}{key}.")
        else:
            setattr(obj, key, val)


def config_from_dict(data: Mapping) -> RunConfig:
    cfg = RunConfig()
    _apply(cfg, data, "")
    cfg.validate()
    return cfg


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from None
    return config_from_dict(data)
