"""HTTP facade over the synthesis pipeline.

Stateless by design: every request carries its full inputs and every
response carries the full outputs, including render-ready artifact text.
Searches run synchronously inside the request, so a /runs call lasts as
long as the search itself; size the epoch budget accordingly.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..allocation import AllocationSolution, solve_sp1
from ..config import RunConfig, config_from_dict
from ..errors import InfeasibleModelError, InputError
from ..evaluation import ModuleMapping, evaluate
from ..grammar import classify_rule, key_str, parse_grammar, pretty_print
from ..model import (
    application_model_from_dict,
    application_model_to_dict,
    generate_synthetic_usecase,
    module_catalog_from_dict,
)
from ..pipeline import execute_run, render_artifacts
from ..topology import TopologyGraph
from .schemas import (
    AllocationRequest,
    AllocationResponse,
    EvaluationRequest,
    EvaluationResponse,
    GenerateUsecaseRequest,
    GenerateUsecaseResponse,
    HealthResponse,
    ParseGrammarRequest,
    ParseGrammarResponse,
    RuleSummary,
    RunRequest,
    RunResponse,
)


def _edge_strs(edges) -> list[str]:
    return [f"{key_str(u)} -> {key_str(v)}" for u, v in edges]


def _config_of(data: dict | None) -> RunConfig:
    cfg = config_from_dict(data) if data else RunConfig()
    cfg.validate()
    return cfg


def create_app() -> FastAPI:
    app = FastAPI(title="netgap", version=__version__)

    @app.exception_handler(InputError)
    async def _input_error(request: Request, exc: InputError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(InfeasibleModelError)
    async def _infeasible(request: Request, exc: InfeasibleModelError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/usecases/generate", response_model=GenerateUsecaseResponse)
    def gen_usecase(req: GenerateUsecaseRequest):
        parts = {
            name: tuple(v) if isinstance(v, list) else v
            for name, v in req.parts.items()
        }
        model = generate_synthetic_usecase(req.n_processes, req.n_messages, parts, req.seed)
        return GenerateUsecaseResponse(model=application_model_to_dict(model))

    @app.post("/grammars/parse", response_model=ParseGrammarResponse)
    def parse(req: ParseGrammarRequest):
        grammar = parse_grammar(req.text)
        rules = []
        for rule in grammar:
            effect = classify_rule(rule)
            rules.append(RuleSummary(
                name=rule.name,
                comment=rule.comment,
                adds_nodes=[key_str(k) for k in effect.added_nodes],
                deletes_nodes=[key_str(k) for k in effect.deleted_nodes],
                relabel=f"{effect.relabel[0]} -> {effect.relabel[1]}" if effect.relabel else None,
                adds_edges=_edge_strs(effect.added_edges),
                deletes_edges=_edge_strs(effect.deleted_edges),
                requires_absent_edges=_edge_strs(effect.requires_absent_edges),
                degree_conditions=[
                    f"{key_str(k)} in [{lo}-{hi}]" for k, (lo, hi) in effect.degree_conditions
                ],
            ))
        return ParseGrammarResponse(n_rules=len(grammar), rules=rules,
                                    canonical=pretty_print(grammar))

    @app.post("/allocations", response_model=AllocationResponse)
    def allocate(req: AllocationRequest):
        model = application_model_from_dict(req.model)
        catalog = module_catalog_from_dict(req.catalog)
        cfg = _config_of(req.config)
        solution = solve_sp1(model, catalog, cfg, seed=req.seed)
        return AllocationResponse(feasible=solution.feasible, allocation=solution.to_dict())

    @app.post("/evaluations", response_model=EvaluationResponse)
    def score(req: EvaluationRequest):
        model = application_model_from_dict(req.model)
        catalog = module_catalog_from_dict(req.catalog)
        cfg = _config_of(req.config)
        topology = TopologyGraph.from_dict(req.topology)
        allocation = AllocationSolution.from_dict(req.allocation)
        mapping = ModuleMapping.from_dict(req.mapping)
        report = evaluate(topology, allocation, mapping, model, cfg, catalog)
        return EvaluationResponse(report=report.to_dict())

    @app.post("/runs", response_model=RunResponse)
    def run_pipeline(req: RunRequest):
        model = application_model_from_dict(req.model)
        catalog = module_catalog_from_dict(req.catalog)
        cfg = _config_of(req.config)
        grammar = parse_grammar(req.grammar)
        start = TopologyGraph.from_dict(req.initial_topology) if req.initial_topology else None
        outcome = execute_run(model, catalog, grammar, cfg, seed=req.seed,
                              start_graph=start)
        return RunResponse(
            feasible=outcome.feasible,
            summary=outcome.summary_dict(),
            artifacts=render_artifacts(outcome, catalog),
        )

    return app
