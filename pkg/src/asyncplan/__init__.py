"""Timed plans with ordering constraints, solved as DAGs and turned into benchmark prompts."""

from .duration import (
    CanonicalDuration,
    Duration,
    TimeUnit,
    UnitConvention,
    add,
    compare,
    format_duration,
    parse_duration,
    parse_total,
    to_seconds,
    unit_distance,
)
from .errors import (
    AssemblyError,
    AsyncPlanError,
    CycleError,
    DotParseError,
    DurationParseError,
    ExtractionError,
    GenerationError,
    JoinError,
    SizeError,
    TaskBlockParseError,
    ValidationError,
)
from .evalstats import EvalRecord, compare_systems, edge_prf, extract_answer, grade, holm_bonferroni, mcnemar
from .plan import END, START, Constraint, Plan, PlanDag, Step, build_dag, complexity, is_series_parallel, transitive_reduce
from .render import Regime, RenderedPrompt, render_prompt
from .scheduler import (
    AnnealParams,
    Schedule,
    critical_path,
    enumerate_paths_oracle,
    finite_makespan_exact,
    finite_makespan_heuristic,
    longest_path,
    optimal_makespan,
)
from .synth import GenConfig, consistency_vote, gen_prototypical_instance, gen_sp_dag, keyword_filter
from .textio import GraphFormat, parse_dot, parse_task_block, serialize

__version__ = "0.1.0"
