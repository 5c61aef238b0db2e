"""Grammar-driven synthesis of networked platform topologies.

The pipeline has three cooperating searches: module allocation sizes a
set of hardware modules and pins application processes to them, a
tree search grows candidate topologies from graph grammar rules, and a
mapping step places the allocated modules onto each candidate before a
multi-criteria evaluation scores it.
"""

__version__ = "0.1.0"

from .allocation import (
    AllocationSolution,
    check_feasibility,
    load_allocation,
    save_allocation,
    solve_sp1,
)
from .config import RunConfig, Sp1Config, Sp2Config, Sp3Config, load_config
from .errors import (
    GrammarParseError,
    InfeasibleModelError,
    InputError,
    NetgapError,
    StaleActionError,
)
from .evaluation import (
    EvaluationReport,
    ModuleMapping,
    TopologyEvaluator,
    disjoint_paths,
    evaluate,
    latency_score,
    load_mapping,
    route_and_load,
    save_mapping,
    save_report,
    topology_cost,
)
from .grammar import Grammar, ProductionRule, load_grammar, parse_grammar, pretty_print
from .mapping import solve_sp3
from .model import (
    ApplicationModel,
    Message,
    ModuleCatalog,
    ModuleSpec,
    Process,
    generate_synthetic_usecase,
    load_application_model,
    load_module_catalog,
    save_application_model,
    save_module_catalog,
)
from .pipeline import (
    COMPARISON_COLUMNS,
    execute_run,
    merge_comparisons,
    render_artifacts,
    run,
    write_artifacts,
)
from .search import CandidateRow, SearchResult, search, worker_count
from .topology import (
    Action,
    ActionSpace,
    TopologyGraph,
    apply_action,
    enumerate_actions,
    load_topology,
    save_topology,
    segments,
    structural_stats,
)

__all__ = [
    "__version__",
    "Action",
    "ActionSpace",
    "AllocationSolution",
    "ApplicationModel",
    "COMPARISON_COLUMNS",
    "CandidateRow",
    "EvaluationReport",
    "Grammar",
    "GrammarParseError",
    "InfeasibleModelError",
    "InputError",
    "Message",
    "ModuleCatalog",
    "ModuleMapping",
    "ModuleSpec",
    "NetgapError",
    "Process",
    "ProductionRule",
    "RunConfig",
    "SearchResult",
    "Sp1Config",
    "Sp2Config",
    "Sp3Config",
    "StaleActionError",
    "TopologyEvaluator",
    "TopologyGraph",
    "apply_action",
    "check_feasibility",
    "disjoint_paths",
    "enumerate_actions",
    "evaluate",
    "execute_run",
    "generate_synthetic_usecase",
    "latency_score",
    "load_allocation",
    "load_application_model",
    "load_config",
    "load_grammar",
    "load_mapping",
    "load_module_catalog",
    "load_topology",
    "merge_comparisons",
    "parse_grammar",
    "pretty_print",
    "render_artifacts",
    "route_and_load",
    "run",
    "save_allocation",
    "save_application_model",
    "save_mapping",
    "save_module_catalog",
    "save_report",
    "save_topology",
    "search",
    "segments",
    "solve_sp1",
    "solve_sp3",
    "structural_stats",
    "topology_cost",
    "worker_count",
    "write_artifacts",
]
