"""Prompt rendering for the six prompting regimes.

A rendered prompt is a plan's task block (header, step lines, constraint
sentences in one of ten phrasings) wrapped in the regime's question and, for
few-shot regimes, preceded by worked exemplars::

    ###Examples:
    <exemplar 1>
    <exemplar 2>
    <exemplar 3>
    ###
    <query>

Exemplar blocks put one blank line before their question (two for the query);
that spacing is part of the fixed layout.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Sequence

from . import templates as T
from .errors import ValidationError
from .plan import Constraint, Plan, build_dag, transitive_reduce
from .scheduler import optimal_makespan
from .textio import GraphFormat, serialize, serialize_time_mapping

__all__ = [
    "Regime",
    "Exemplar",
    "ExemplarBank",
    "RenderedPrompt",
    "render_constraints",
    "render_task_block",
    "render_prompt",
    "default_bank",
]


class Regime(str, enum.Enum):
    ZERO_SHOT = "zero_shot"
    ZERO_SHOT_COT = "zero_shot_cot"
    K_SHOT = "k_shot"
    K_SHOT_COT = "k_shot_cot"
    PLAG_EXPLICIT = "plag_explicit"
    PLAG_BAG = "plag_bag"

    @property
    def needs_graph(self) -> bool:
        return self in (Regime.PLAG_EXPLICIT, Regime.PLAG_BAG)

    @property
    def needs_exemplars(self) -> bool:
        return self not in (Regime.ZERO_SHOT, Regime.ZERO_SHOT_COT)


def render_constraints(edges, template: int = 2, economic: bool = False) -> list[str]:
    """One sentence per edge, or one per preceding step when ``economic``."""
    tpl = T.get_template(template)
    cons = sorted(Constraint(*e) if not isinstance(e, Constraint) else e for e in edges)
    if not economic:
        return [tpl.render(c.before, c.after) for c in cons]
    grouped: dict[int, list[int]] = {}
    for c in cons:
        grouped.setdefault(c.before, []).append(c.after)
    return [tpl.render(before, afters) for before, afters in grouped.items()]


def _graph_section(plan: Plan, fmt: GraphFormat) -> str:
    dag = build_dag(plan)
    return "\n".join(
        [
            T.GRAPH_INTRO.format(name=fmt.label),
            serialize(dag, fmt),
            T.TIME_INTRO,
            serialize_time_mapping(dag),
        ]
    )


def render_task_block(
    plan: Plan,
    template: int = 2,
    economic: bool = False,
    graph_format: GraphFormat | None = None,
    exemplar: bool = False,
) -> str:
    """Header, steps, constraints and optional graph section, ending in the gap before the question."""
    gap = "\n\n" if exemplar else "\n\n\n"
    lines = [T.HEADER.format(task=plan.task)]
    lines += [T.STEP_LINE.format(index=s.index, text=s.text, duration=s.duration) for s in plan.steps]
    text = "\n".join(lines) + "\n\n\n"
    sentences = render_constraints(plan.constraints, template, economic)
    if sentences:
        text += T.CONSTRAINTS_INTRO + "\n" + "\n".join(sentences) + gap
    if graph_format is not None:
        text += _graph_section(plan, graph_format) + gap
    return text


def _question(task: str, ask: str) -> str:
    return T.QUESTION_STEM.format(task=task) + " " + ask


@dataclass(frozen=True)
class Exemplar:
    plan: Plan
    cot: str
    synthetic: bool = False
    name: str = ""

    @property
    def gold(self) -> str:
        dag = build_dag(self.plan)
        return dag.format_time(optimal_makespan(dag))

    @property
    def direct_answer(self) -> str:
        return f'The shortest possible time to {self.plan.task} is "{self.gold}".'


@dataclass(frozen=True)
class ExemplarBank:
    exemplars: tuple[Exemplar, ...]

    def __post_init__(self):
        from .evalstats import extract_answer

        object.__setattr__(self, "exemplars", tuple(self.exemplars))
        if not self.exemplars:
            raise ValidationError("an exemplar bank needs at least one exemplar")
        for ex in self.exemplars:
            gold = optimal_makespan(build_dag(ex.plan))
            for answer in (ex.cot, ex.direct_answer):
                if not answer.rstrip().rstrip(".").endswith('"') or extract_answer(answer) != gold:
                    raise ValidationError(f"exemplar {ex.name or ex.plan.task!r} does not end with its gold answer")

    @property
    def k(self) -> int:
        return len(self.exemplars)

    @classmethod
    def from_json(cls, obj) -> "ExemplarBank":
        return cls(
            tuple(
                Exemplar(Plan.from_dict(e["plan"]), e["cot"], bool(e.get("synthetic")), e.get("name", ""))
                for e in obj["exemplars"]
            )
        )


@lru_cache(maxsize=1)
def default_bank() -> ExemplarBank:
    """Three exemplars: the Calzones plan plus two synthetic ones (marked ``synthetic``)."""
    raw = (resources.files("asyncplan") / "data" / "exemplars.json").read_text(encoding="utf-8")
    return ExemplarBank.from_json(json.loads(raw))


@dataclass(frozen=True)
class RenderedPrompt:
    instance_id: str
    regime: Regime
    template: int
    economic: bool
    graph_format: GraphFormat | None
    text: str

    @property
    def id(self) -> str:
        fmt = self.graph_format.value if self.graph_format else "none"
        econ = "econ" if self.economic else "plain"
        return f"{self.instance_id}:{self.regime.value}:t{self.template}:{econ}:{fmt}"

    def to_row(self, **extra) -> dict:
        row = {
            "id": self.id,
            "instance_id": self.instance_id,
            "regime": self.regime.value,
            "template": self.template,
            "economic": self.economic,
            "graph_format": self.graph_format.value if self.graph_format else None,
            "prompt": self.text,
        }
        row.update(extra)
        return row


def _exemplar_text(ex: Exemplar, regime: Regime, template, economic, fmt) -> str:
    plan = _reduced(ex.plan)
    if regime is Regime.K_SHOT:
        block = render_task_block(plan, template, economic, exemplar=True)
        return block + _question(plan.task, T.ASK_PLAIN) + "\nAnswer: " + ex.direct_answer
    if regime is Regime.K_SHOT_COT:
        block = render_task_block(plan, template, economic, exemplar=True)
        return block + _question(plan.task, T.ASK_PLAIN) + "\nAnswer: " + ex.cot
    if regime is Regime.PLAG_EXPLICIT:
        block = render_task_block(plan, template, economic, fmt, exemplar=True)
        return block + _question(plan.task, T.ASK_PLAIN) + "\nAnswer: " + ex.cot
    block = render_task_block(plan, template, economic, exemplar=True)
    answer = _graph_section(plan, fmt) + "\n" + ex.cot
    return block + _question(plan.task, T.ASK_BAG) + "\nAnswer: " + answer


def _reduced(plan: Plan) -> Plan:
    reduced = transitive_reduce(plan.constraints)
    if reduced == plan.constraints:
        return plan
    return Plan(plan.task, plan.steps, reduced)


def render_prompt(
    plan: Plan,
    regime: Regime | str,
    template: int = 2,
    economic: bool = False,
    graph_format: GraphFormat | str | None = None,
    bank: ExemplarBank | None = None,
    instance_id: str = "",
) -> RenderedPrompt:
    """Render ``plan`` as a complete prompt ending in ``Answer:``.

    Constraints are transitively reduced first. PLaG regimes require
    ``graph_format``; few-shot regimes use ``bank`` (default: three exemplars).
    """
    regime = Regime(regime)
    T.get_template(template)
    fmt = GraphFormat(graph_format) if graph_format is not None else None
    if regime.needs_graph and fmt is None:
        raise ValidationError(f"regime {regime.value} needs a graph format")
    if not regime.needs_graph:
        fmt = None
    plan = _reduced(plan)

    if regime is Regime.ZERO_SHOT:
        query = render_task_block(plan, template, economic) + _question(plan.task, T.ASK_PLAIN)
    elif regime in (Regime.ZERO_SHOT_COT, Regime.K_SHOT_COT):
        query = render_task_block(plan, template, economic) + _question(plan.task, T.ASK_COT)
    elif regime is Regime.K_SHOT:
        query = render_task_block(plan, template, economic) + _question(plan.task, T.ASK_PLAIN)
    elif regime is Regime.PLAG_EXPLICIT:
        query = render_task_block(plan, template, economic, fmt) + _question(plan.task, T.ASK_COT)
    else:
        query = render_task_block(plan, template, economic) + _question(plan.task, T.ASK_BAG)
    query += "\n" + T.ANSWER

    if regime.needs_exemplars:
        bank = bank or default_bank()
        shots = "\n".join(_exemplar_text(ex, regime, template, economic, fmt) for ex in bank.exemplars)
        text = "###Examples:\n" + shots + "\n###\n" + query
    else:
        text = query
    return RenderedPrompt(instance_id, regime, template, economic, fmt, text)


def render_batch(
    items: Sequence[tuple[str, Plan]],
    regimes: Sequence[Regime | str],
    templates: Sequence[int] = (2,),
    economic: Sequence[bool] = (False,),
    graph_formats: Sequence[GraphFormat | str | None] = (None,),
    bank: ExemplarBank | None = None,
) -> list[RenderedPrompt]:
    """Cartesian product of options over ``(instance_id, plan)`` pairs, in a stable order."""
    out = []
    for iid, plan in items:
        for regime in regimes:
            regime = Regime(regime)
            fmts = [f for f in graph_formats if f is not None] if regime.needs_graph else [None]
            if regime.needs_graph and not fmts:
                raise ValidationError(f"regime {regime.value} needs a graph format")
            for t in templates:
                for e in economic:
                    for f in fmts:
                        out.append(render_prompt(plan, regime, t, e, f, bank, iid))
    return out
