"""Text in and out: dot-style edge lists, task blocks, graph wire formats.

The four graph serializations are embedded verbatim in prompts and dataset
records, so their layout is fixed byte for byte:

adjacency list
    ``{'1': ['5'], '2': ['3'], ..., 'END': [], 'START': ['1', '2']}``; step
    keys ascending, then ``'END'``, then ``'START'``; successors ascending
    with ``'END'`` last.
edge list
    ``[[0, 1, 0], [1, 5, 10], ...]``; START relabelled 0, END relabelled
    ``max(step) + 1``, triples sorted, weight = duration of the source node in
    the plan's finest unit.
adjacency matrix
    ``[[0, 1, 0], [0, 0, 1], [0, 0, 0]]`` over ``[START, steps..., END]``.
csr
    three lines ``offsets: [...]``, ``targets: [...]``, ``weights: [...]``
    over the same node order as the matrix.
"""

from __future__ import annotations

import enum
import re
from fractions import Fraction

from . import templates as T
from .duration import _fmt_number
from .errors import DotParseError, DurationParseError, TaskBlockParseError, ValidationError
from .plan import END, START, Plan, PlanDag, Step, _single_duration

__all__ = [
    "GraphFormat",
    "parse_dot",
    "parse_task_block",
    "serialize",
    "serialize_adjacency_list",
    "serialize_time_mapping",
    "serialize_edge_list",
    "serialize_adjacency_matrix",
    "serialize_csr",
    "format_edge_list",
    "relabel",
]


class GraphFormat(str, enum.Enum):
    ADJACENCY_LIST = "adjacency_list"
    EDGE_LIST = "edge_list"
    ADJACENCY_MATRIX = "adjacency_matrix"
    CSR = "csr"

    @property
    def label(self) -> str:
        return {
            "adjacency_list": "adjacency list",
            "edge_list": "edge list",
            "adjacency_matrix": "adjacency matrix",
            "csr": "compressed sparse row (csr)",
        }[self.value]


_DOT_LINE = re.compile(
    r"""(?:step\s*)?"?\s*(?:step\s*)?(\d+)\s*"?\s*(?:->|→)\s*(?:step\s*)?"?\s*(?:step\s*)?(\d+)\s*"?\s*;?""",
    re.IGNORECASE,
)
_DOT_WRAPPER = re.compile(r"(?:strict\s+)?digraph\b.*\{|\}", re.IGNORECASE)


def parse_dot(text: str) -> list[tuple[int, int]]:
    """Parse one ``before -> after`` edge per line, keeping first occurrences.

    Accepted line shapes: ``"1" -> "2"``, ``1 -> 2``, ``step 1 -> step 2``
    (an optional trailing ``;`` and a ``digraph {...}`` wrapper are tolerated).
    """
    out = []
    seen = set()
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or _DOT_WRAPPER.fullmatch(line):
            continue
        m = _DOT_LINE.fullmatch(line)
        if m is None:
            raise DotParseError(f"not an edge: {raw!r}", no)
        edge = (int(m[1]), int(m[2]))
        if edge[0] < 1 or edge[1] < 1:
            raise DotParseError(f"step indices must be positive: {raw!r}", no)
        if edge not in seen:
            seen.add(edge)
            out.append(edge)
    return out


_HEADER_RE = re.compile(r"To (?P<task>.+), here are the steps and the times needed for each step\.")
_STEP_RE = re.compile(r"Step (?P<index>\d+)\. (?P<text>.*) \((?P<duration>[^()]*)\)")
_STEP_LOOSE = re.compile(r"Step \d+\.")
_INTRO_RE = re.compile(re.escape(T.CONSTRAINTS_INTRO[:-1]) + r"[:.]")


def parse_task_block(text: str) -> Plan:
    """Recover a :class:`Plan` from a rendered task block or whole prompt.

    For few-shot prompts only the final block (after the last ``###`` line) is
    read. Parsing stops at the graph section or the ``Question:`` line.
    """
    lines = text.replace("\r\n", "\n").split("\n")
    marks = [i for i, ln in enumerate(lines) if ln.strip() == "###"]
    if marks:
        lines = lines[marks[-1] + 1:]
    lines = [ln.strip() for ln in lines]
    pos = 0
    while pos < len(lines) and not lines[pos]:
        pos += 1
    if pos == len(lines):
        raise TaskBlockParseError("empty task block")
    m = _HEADER_RE.fullmatch(lines[pos])
    if m is None:
        raise TaskBlockParseError(f"missing task header, got {lines[pos]!r}")
    task = m["task"]
    pos += 1

    steps = []
    while pos < len(lines) and lines[pos]:
        line = lines[pos]
        sm = _STEP_RE.fullmatch(line)
        if sm is None:
            if _STEP_LOOSE.match(line):
                raise TaskBlockParseError(f"step line without a duration in parentheses: {line!r}")
            break
        try:
            dur = _single_duration(sm["duration"])
        except DurationParseError as exc:
            raise TaskBlockParseError(f"bad duration in {line!r}: {exc}") from exc
        steps.append(Step(int(sm["index"]), sm["text"], dur))
        pos += 1
    if not steps:
        raise TaskBlockParseError("task block lists no steps")

    edges = []
    while pos < len(lines) and not lines[pos]:
        pos += 1
    if pos < len(lines) and _INTRO_RE.fullmatch(lines[pos]):
        pos += 1
        while pos < len(lines) and lines[pos]:
            sentence = lines[pos]
            if sentence.startswith(("Question:", "Here is the ")):
                break
            hit = T.match_sentence(sentence)
            if hit is None:
                raise TaskBlockParseError(f"unknown constraint phrasing: {sentence!r}")
            _, before, afters = hit
            edges.extend((before, a) for a in afters)
            pos += 1
    try:
        return Plan(task, tuple(steps), tuple(edges))
    except ValidationError as exc:
        raise TaskBlockParseError(str(exc)) from exc


def _q(node) -> str:
    return f"'{node}'"


def serialize_adjacency_list(dag: PlanDag) -> str:
    keys = [*dag.steps, END, START]
    items = []
    for k in keys:
        succ = sorted(dag.successors[k], key=lambda n: (n == END, n if n != END else 0))
        items.append(f"{_q(k)}: [{', '.join(_q(s) for s in succ)}]")
    return "{" + ", ".join(items) + "}"


def serialize_time_mapping(dag: PlanDag) -> str:
    return "{" + ", ".join(f"{_q(i)}: {_q(d)}" for i, d in dag.durations.items()) + "}"


def relabel(dag: PlanDag) -> dict:
    """Integer ids used by edge list: START -> 0, steps keep their index, END -> max + 1."""
    ids = {START: 0, END: max(dag.steps) + 1}
    ids.update({s: s for s in dag.steps})
    return ids


def _num(x) -> str:
    return _fmt_number(Fraction(x))


def format_edge_list(edges) -> str:
    """``[[i, j, w], ...]`` or ``[[i, j], ...]`` from integer tuples, sorted."""
    rows = sorted(tuple(e) for e in edges)
    return "[" + ", ".join("[" + ", ".join(_num(x) for x in row) + "]" for row in rows) + "]"


def serialize_edge_list(dag: PlanDag, weights: bool = True) -> str:
    ids = relabel(dag)
    if weights:
        rows = [(ids[u], ids[v], dag.native_weight(u)) for u, v in dag.edges]
    else:
        rows = [(ids[u], ids[v]) for u, v in dag.edges]
    return format_edge_list(rows)


def _positions(dag: PlanDag) -> dict:
    return {n: k for k, n in enumerate(dag.nodes)}


def serialize_adjacency_matrix(dag: PlanDag) -> str:
    pos = _positions(dag)
    n = len(pos)
    rows = [[0] * n for _ in range(n)]
    for u, v in dag.edges:
        rows[pos[u]][pos[v]] = 1
    return "[" + ", ".join("[" + ", ".join(map(str, r)) + "]" for r in rows) + "]"


def serialize_csr(dag: PlanDag) -> str:
    pos = _positions(dag)
    offsets = [0]
    targets = []
    weights = []
    for node in dag.nodes:
        succ = sorted(pos[v] for v in dag.successors[node])
        targets.extend(succ)
        weights.extend([dag.native_weight(node)] * len(succ))
        offsets.append(len(targets))
    return (
        f"offsets: [{', '.join(map(str, offsets))}]\n"
        f"targets: [{', '.join(map(str, targets))}]\n"
        f"weights: [{', '.join(_num(w) for w in weights)}]"
    )


def serialize(dag: PlanDag, fmt) -> str:
    fmt = GraphFormat(fmt)
    if fmt is GraphFormat.ADJACENCY_LIST:
        return serialize_adjacency_list(dag)
    if fmt is GraphFormat.EDGE_LIST:
        return serialize_edge_list(dag)
    if fmt is GraphFormat.ADJACENCY_MATRIX:
        return serialize_adjacency_matrix(dag)
    return serialize_csr(dag)


def all_serializations(dag: PlanDag) -> dict[str, str]:
    return {f.value: serialize(dag, f) for f in GraphFormat}
