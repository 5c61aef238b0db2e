"""End-to-end run orchestration and artifact rendering.

One run is: allocate processes to modules, search the grammar for
topologies, map the allocation onto each terminal, keep the best.  The
artifacts are rendered as text here so that callers (CLI, service) can
write them wherever they like, byte for byte.

Reproducibility contract: with parallel_rollouts=1 and a fixed seed,
comparison.csv and run_log.jsonl are byte-identical across runs.  Wall
times are quarantined in timing.json, which is exempt from that promise.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .allocation import AllocationSolution, solve_sp1
from .config import RunConfig
from .errors import InputError
from .grammar import Grammar
from .model import ApplicationModel, ModuleCatalog
from .search import SearchResult, search
from .topology import TopologyGraph

COMPARISON_COLUMNS = (
    "candidate", "epoch", "feasible", "reward", "latency_score", "cost_score",
    "dp_score", "mean_disjoint_paths", "mean_hops", "max_link_load",
    "max_node_load", "overloaded_links", "processing_modules", "switches",
    "gateways", "links", "segments", "cost_units",
)


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def render_comparison(rows) -> str:
    """Comparison table as RFC-4180 CSV text with a fixed column set."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(COMPARISON_COLUMNS)
    for row in rows:
        writer.writerow([_cell(getattr(row, col)) for col in COMPARISON_COLUMNS])
    return buf.getvalue()


def merge_comparisons(texts) -> str:
    """Concatenate comparison tables, renumbering the candidate column."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\r\n")
    writer.writerow(COMPARISON_COLUMNS)
    n = 0
    for text in texts:
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header != list(COMPARISON_COLUMNS):
            raise InputError("comparison table has unexpected columns")
        for record in reader:
            if not record:
                continue
            record[0] = str(n)
            writer.writerow(record)
            n += 1
    return out.getvalue()


@dataclass
class RunOutcome:
    allocation: AllocationSolution
    result: SearchResult
    log_rows: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.result.feasible

    def summary_dict(self) -> dict:
        summary = {
            "allocation_feasible": self.allocation.feasible,
            "included_modules": self.allocation.n_included,
            **self.result.summary_dict(),
        }
        return summary


def execute_run(model: ApplicationModel, catalog: ModuleCatalog, grammar: Grammar,
                config: RunConfig, seed: int | None = None,
                start_graph: TopologyGraph | None = None,
                on_progress=None) -> RunOutcome:
    """Allocation, then search; timings on the side."""
    config.validate()
    log_rows: list[dict] = []

    def _progress(row: dict) -> None:
        log_rows.append(row)
        if on_progress:
            on_progress(row)

    t0 = time.perf_counter()
    allocation = solve_sp1(model, catalog, config, seed=seed)
    t1 = time.perf_counter()
    result = search(grammar, allocation, model, config, catalog, seed=seed,
                    start_graph=start_graph, on_progress=_progress)
    t2 = time.perf_counter()
    timings = {
        "sp1_seconds": t1 - t0,
        "search_seconds": t2 - t1,
        "total_seconds": t2 - t0,
    }
    return RunOutcome(allocation, result, log_rows, timings)


def render_artifacts(outcome: RunOutcome, catalog: ModuleCatalog) -> dict:
    """All run artifacts as {filename: text}, deterministic except timing.json."""
    artifacts: dict[str, str] = {}
    artifacts["allocation.json"] = (
        json.dumps(outcome.allocation.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    artifacts["comparison.csv"] = render_comparison(outcome.result.candidates)
    artifacts["run_log.jsonl"] = "".join(
        json.dumps(row, sort_keys=True) + "\n" for row in outcome.log_rows
    )
    artifacts["summary.json"] = json.dumps(outcome.summary_dict(), indent=2,
                                           sort_keys=True) + "\n"
    result = outcome.result
    if result.best_topology is not None:
        artifacts["best_topology.json"] = result.best_topology.to_json()
        artifacts["best_topology.dot"] = result.best_topology.to_dot(catalog)
        artifacts["best_mapping.json"] = json.dumps(
            result.best_mapping.to_dict(), indent=2, sort_keys=True) + "\n"
        artifacts["report.json"] = json.dumps(
            result.best_report.to_dict(), indent=2, sort_keys=True) + "\n"
    artifacts["timing.json"] = json.dumps(outcome.timings, indent=2, sort_keys=True) + "\n"
    return artifacts


def write_artifacts(artifacts: dict, out_dir) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in sorted(artifacts.items()):
        path = out / name
        # newline="" keeps the CSV's \r\n terminators intact on every platform
        path.write_text(text, encoding="utf-8", newline="")
        written.append(path)
    return written


def run(model: ApplicationModel, catalog: ModuleCatalog, grammar: Grammar,
        config: RunConfig, out_dir, seed: int | None = None,
        start_graph: TopologyGraph | None = None, on_progress=None) -> RunOutcome:
    """Convenience wrapper: execute, render, write to out_dir."""
    outcome = execute_run(model, catalog, grammar, config, seed=seed,
                          start_graph=start_graph, on_progress=on_progress)
    write_artifacts(render_artifacts(outcome, catalog), out_dir)
    return outcome
