"""Request and response shapes of the HTTP API.

These stay deliberately thin: structured payloads (application models,
catalogs, configs, topologies) travel as plain JSON objects and are
validated by the core loaders, which produce far better error messages
than field-by-field schema duplication would.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class GenerateUsecaseRequest(BaseModel):
    n_processes: int = Field(gt=0)
    n_messages: int = Field(ge=0)
    parts: dict  # part name -> process count, or [process count, message count]
    seed: int = 1


class GenerateUsecaseResponse(BaseModel):
    model: dict


class ParseGrammarRequest(BaseModel):
    text: str


class RuleSummary(BaseModel):
    name: str
    comment: str | None = None
    adds_nodes: list[str]
    deletes_nodes: list[str]
    relabel: str | None = None
    adds_edges: list[str]
    deletes_edges: list[str]
    requires_absent_edges: list[str]
    degree_conditions: list[str]


class ParseGrammarResponse(BaseModel):
    n_rules: int
    rules: list[RuleSummary]
    canonical: str  # pretty-printed form; parses back to the same grammar


class AllocationRequest(BaseModel):
    model: dict
    catalog: dict
    config: dict | None = None
    seed: int | None = None


class AllocationResponse(BaseModel):
    feasible: bool
    allocation: dict


class EvaluationRequest(BaseModel):
    topology: dict
    allocation: dict
    mapping: dict  # vertex id -> slot index
    model: dict
    catalog: dict
    config: dict | None = None


class EvaluationResponse(BaseModel):
    report: dict


class RunRequest(BaseModel):
    model: dict
    catalog: dict
    grammar: str  # DSL text
    config: dict | None = None
    seed: int | None = None
    initial_topology: dict | None = None


class RunResponse(BaseModel):
    feasible: bool
    summary: dict
    artifacts: dict  # filename -> exact text content, written verbatim by clients
