"""What-if analysis workbench for linear and integer optimization models.

Parse a marker-region model, apply three-key patches, re-solve, quantify
the change as a graph-edit distance over the bipartite model graph, and
produce dual explanations through a pluggable chat provider.
"""

from .model import (
    ConstraintDef,
    LinearModel,
    ParamDef,
    Region,
    Sense,
    StandardFormLP,
    VariableDef,
    render_model,
    to_standard_form,
)
from .parser import ParseError, parse_model
from .solver import Solution, SolveStatus, solve_lp, solve_milp
from .graph import (
    BipartiteGraph,
    GedReport,
    build_graph,
    decision_information,
    ged_exact,
    ged_named,
)
from .patch import (
    PatchError,
    PatchViolation,
    QueryPatch,
    apply_patch,
    extract_patch,
    parse_patch,
    validate_patch,
)
from .providers import HttpChatProvider, MockProvider, ProviderError
from .session import AgentConfig, SessionOutcome, SessionPhase, commander_run
from .bench import (
    BenchmarkProblem,
    BenchmarkQuery,
    EvalResult,
    JudgeScores,
    classify_failure,
    judge_explanations,
    load_dataset,
    run_accuracy,
    run_benchmark,
)

__version__ = "0.1.0"
