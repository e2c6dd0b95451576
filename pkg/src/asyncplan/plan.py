"""Plans, their weighted DAGs, and structural operations on them.

A :class:`Plan` is the naturalistic record (task, steps with durations,
ordering constraints). :func:`build_dag` turns it into a :class:`PlanDag` with
two sentinel nodes, ``START`` and ``END``; the weight of an edge ``(i, j)`` is
the duration of its source step and edges leaving ``START`` weigh nothing.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from types import MappingProxyType
from typing import Hashable, Iterable, Mapping, Union

from .duration import DEFAULT_CONVENTION, Duration, TimeUnit, UnitConvention, format_duration, parse_duration
from .errors import CycleError, PlanReferenceError, ValidationError

__all__ = [
    "START",
    "END",
    "Step",
    "Constraint",
    "Plan",
    "PlanDag",
    "build_dag",
    "transitive_reduce",
    "complexity",
    "is_series_parallel",
    "node_key",
    "find_cycle",
]

START = "START"
END = "END"

Node = Union[int, str]


def node_key(node: Node):
    """Sort key placing START first, steps ascending, END last."""
    if node == START:
        return (0, 0)
    if node == END:
        return (2, 0)
    return (1, node)


@dataclass(frozen=True)
class Step:
    index: int
    text: str
    duration: Duration

    def __post_init__(self):
        if isinstance(self.index, bool) or not isinstance(self.index, int) or self.index < 1:
            raise ValidationError(f"step index must be a positive integer, got {self.index!r}")
        if isinstance(self.duration, str):
            object.__setattr__(self, "duration", _single_duration(self.duration))
        if self.duration.value <= 0:
            raise ValidationError(f"step {self.index} must have a positive duration")


def _single_duration(text: str) -> Duration:
    parts = parse_duration(text)
    if len(parts) == 1:
        return parts[0]
    # compound ("1 hour and 5 min"): fold into the finest unit present
    unit = min(p.unit for p in parts)
    size = DEFAULT_CONVENTION.seconds_per(unit)
    total = sum((p.seconds() for p in parts), Fraction(0))
    return Duration(total / size, unit)


@dataclass(frozen=True, order=True)
class Constraint:
    before: int
    after: int

    def __post_init__(self):
        if self.before == self.after:
            raise CycleError([self.before, self.after])

    def __iter__(self):
        yield self.before
        yield self.after

    def __repr__(self) -> str:
        return f"{self.before}->{self.after}"


def _as_constraints(edges) -> tuple[Constraint, ...]:
    out = set()
    for e in edges:
        if not isinstance(e, Constraint):
            before, after = e
            e = Constraint(int(before), int(after))
        out.add(e)
    return tuple(sorted(out))


def find_cycle(succ: Mapping[Hashable, Iterable[Hashable]]):
    """Return one directed cycle as a node list (first node repeated), or None."""
    WHITE, GREY, BLACK = 0, 1, 2
    color = defaultdict(int)
    nodes = sorted(set(succ) | {v for vs in succ.values() for v in vs}, key=node_key)
    for root in nodes:
        if color[root] != WHITE:
            continue
        stack = [(root, iter(sorted(succ.get(root, ()), key=node_key)))]
        path = [root]
        color[root] = GREY
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = BLACK
                stack.pop()
                path.pop()
            elif color[nxt] == GREY:
                return path[path.index(nxt):] + [nxt]
            elif color[nxt] == WHITE:
                color[nxt] = GREY
                path.append(nxt)
                stack.append((nxt, iter(sorted(succ.get(nxt, ()), key=node_key))))
    return None


@dataclass(frozen=True)
class Plan:
    """Task name, indexed steps and ordering constraints.

    Validated on construction: at least one step, unique indices, constraints
    refer to existing steps and induce no cycle.
    """

    task: str
    steps: tuple[Step, ...]
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self):
        steps = tuple(self.steps)
        if not steps:
            raise ValidationError("a plan needs at least one step")
        counts = Counter(s.index for s in steps)
        dupes = sorted(i for i, c in counts.items() if c > 1)
        if dupes:
            raise ValidationError(f"duplicate step indices: {dupes}")
        cons = _as_constraints(self.constraints)
        known = set(counts)
        for c in cons:
            missing = [i for i in c if i not in known]
            if missing:
                raise PlanReferenceError(f"constraint {c!r} refers to unknown step {missing[0]}")
        succ = defaultdict(list)
        for c in cons:
            succ[c.before].append(c.after)
        cycle = find_cycle(succ)
        if cycle:
            raise CycleError(cycle)
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "constraints", cons)

    def step(self, index: int) -> Step:
        for s in self.steps:
            if s.index == index:
                return s
        raise KeyError(index)

    @property
    def durations(self) -> dict[int, Duration]:
        return {s.index: s.duration for s in self.steps}

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "steps": [
                {"index": s.index, "text": s.text, "duration": str(s.duration)} for s in self.steps
            ],
            "constraints": [[c.before, c.after] for c in self.constraints],
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "Plan":
        try:
            steps = tuple(
                Step(int(s["index"]), str(s.get("text", "")), _single_duration(str(s["duration"])))
                for s in obj["steps"]
            )
            return cls(str(obj["task"]), steps, tuple(tuple(c) for c in obj.get("constraints", ())))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed plan record: {exc}") from exc


@dataclass(frozen=True)
class PlanDag:
    """Weighted DAG with START/END sentinels.

    ``durations`` maps every step node to its duration; ``edges`` is the sorted
    edge tuple. Construction checks acyclicity, sentinel degrees and that every
    step lies on a START->END path.
    """

    durations: Mapping[int, Duration]
    edges: tuple[tuple[Node, Node], ...]
    task: str = ""
    convention: UnitConvention = field(default=DEFAULT_CONVENTION, compare=False)

    def __post_init__(self):
        durs = MappingProxyType(dict(sorted(self.durations.items())))
        edges = tuple(sorted(set(tuple(e) for e in self.edges), key=lambda e: (node_key(e[0]), node_key(e[1]))))
        object.__setattr__(self, "durations", durs)
        object.__setattr__(self, "edges", edges)
        nodes = set(durs) | {START, END}
        for u, v in edges:
            for n in (u, v):
                if n not in nodes:
                    raise PlanReferenceError(f"edge {u}->{v} refers to unknown node {n!r}")
            if u == END or v == START:
                raise ValidationError(f"edge {u}->{v} violates sentinel direction")
            if u == v:
                raise CycleError([u, v])
        cycle = find_cycle(self.successors)
        if cycle:
            raise CycleError(cycle)
        fwd = self._reach(START, self.successors)
        bwd = self._reach(END, self.predecessors)
        stranded = [n for n in durs if n not in fwd or n not in bwd]
        if stranded or END not in fwd:
            raise ValidationError(f"steps not on any START->END path: {stranded}")

    def __reduce__(self):
        return (PlanDag, (dict(self.durations), self.edges, self.task, self.convention))

    @staticmethod
    def _reach(root, adj):
        seen = {root}
        todo = [root]
        while todo:
            for nxt in adj.get(todo.pop(), ()):
                if nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        return seen

    @cached_property
    def steps(self) -> tuple[int, ...]:
        return tuple(self.durations)

    @cached_property
    def nodes(self) -> tuple[Node, ...]:
        return (START, *self.steps, END)

    @cached_property
    def successors(self) -> Mapping[Node, tuple[Node, ...]]:
        succ = {n: [] for n in (START, *self.durations, END)}
        for u, v in self.edges:
            succ[u].append(v)
        return MappingProxyType({n: tuple(vs) for n, vs in succ.items()})

    @cached_property
    def predecessors(self) -> Mapping[Node, tuple[Node, ...]]:
        pred = {n: [] for n in (START, *self.durations, END)}
        for u, v in self.edges:
            pred[v].append(u)
        return MappingProxyType({n: tuple(vs) for n, vs in pred.items()})

    @cached_property
    def topological_order(self) -> tuple[Node, ...]:
        """Kahn's algorithm; ties go to the smallest node."""
        import heapq

        indeg = {n: len(self.predecessors[n]) for n in self.nodes}
        heap = [(node_key(n), n) for n, d in indeg.items() if d == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            _, n = heapq.heappop(heap)
            order.append(n)
            for m in self.successors[n]:
                indeg[m] -= 1
                if indeg[m] == 0:
                    heapq.heappush(heap, (node_key(m), m))
        return tuple(order)

    def node_seconds(self, node: Node) -> Fraction:
        if node in (START, END):
            return Fraction(0)
        return self.durations[node].seconds(self.convention)

    def weight(self, u: Node, v: Node) -> Fraction:
        """Canonical-second weight of edge ``(u, v)``: the duration of ``u``."""
        return self.node_seconds(u)

    def weighted_edges(self) -> list[tuple[Node, Node, Fraction]]:
        return [(u, v, self.node_seconds(u)) for u, v in self.edges]

    @property
    def constraints(self) -> tuple[Constraint, ...]:
        return tuple(Constraint(u, v) for u, v in self.edges if u != START and v != END)

    @property
    def n_nodes(self) -> int:
        return len(self.durations) + 2

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def native_unit(self) -> TimeUnit:
        """Finest unit used by any step; edge-list weights are expressed in it."""
        return min(d.unit for d in self.durations.values())

    def coarsest_unit(self) -> TimeUnit:
        return max(d.unit for d in self.durations.values())

    def format_time(self, d, style: str = "largest-unit") -> str:
        """Text for a time on this plan, in units no coarser than the plan's own."""
        return format_duration(d, style, self.convention, max_unit=self.coarsest_unit())

    def native_weight(self, node: Node) -> Fraction:
        if node in (START, END):
            return Fraction(0)
        return self.node_seconds(node) / self.convention.seconds_per(self.native_unit())

    def to_plan(self) -> Plan:
        steps = tuple(Step(i, f"Step {i}", d) for i, d in self.durations.items())
        return Plan(self.task, steps, self.constraints)


def build_dag(plan: Plan, convention: UnitConvention = DEFAULT_CONVENTION) -> PlanDag:
    """Attach START to every source step and every sink step to END."""
    has_pred = {c.after for c in plan.constraints}
    has_succ = {c.before for c in plan.constraints}
    edges = [(c.before, c.after) for c in plan.constraints]
    for s in plan.steps:
        if s.index not in has_pred:
            edges.append((START, s.index))
        if s.index not in has_succ:
            edges.append((s.index, END))
    return PlanDag(plan.durations, tuple(edges), task=plan.task, convention=convention)


def transitive_reduce(edges: Iterable) -> tuple[Constraint, ...]:
    """Minimal edge set with the same reachability, sorted by (before, after).

    An edge ``u -> v`` survives only if ``v`` is not reachable from another
    direct successor of ``u``. Raises :class:`CycleError` on cyclic input.
    """
    cons = _as_constraints(edges)
    succ = defaultdict(set)
    for c in cons:
        succ[c.before].add(c.after)
    cycle = find_cycle(succ)
    if cycle:
        raise CycleError(cycle)
    # reachability as bitsets, filled in reverse topological order
    nodes = sorted({i for c in cons for i in c})
    bit = {n: 1 << k for k, n in enumerate(nodes)}
    reach = {}

    def visit(n):
        if n in reach:
            return reach[n]
        acc = 0
        for m in succ.get(n, ()):
            acc |= bit[m] | visit(m)
        reach[n] = acc
        return acc

    for n in nodes:
        visit(n)
    kept = []
    for c in cons:
        others = 0
        for w in succ[c.before]:
            if w != c.after:
                others |= reach[w]
        if not others & bit[c.after]:
            kept.append(c)
    return tuple(kept)


def complexity(dag: PlanDag, include_sentinels: bool = True) -> int:
    """Task complexity |V| + |E|.

    By default START, END and their incident edges are counted. With
    ``include_sentinels=False`` only steps and step-to-step edges are counted.
    """
    if include_sentinels:
        return dag.n_nodes + dag.n_edges
    return len(dag.steps) + len(dag.constraints)


def is_series_parallel(dag: PlanDag) -> bool:
    """True iff the (START, END) two-terminal graph reduces to one edge.

    Applies parallel reductions (merge multi-edges) and series reductions
    (splice out a non-terminal node with one in-edge and one out-edge) until
    neither applies.
    """
    mult = Counter(dag.edges)
    succ = defaultdict(set)
    pred = defaultdict(set)
    for u, v in mult:
        succ[u].add(v)
        pred[v].add(u)
    todo = [n for n in dag.steps]
    while todo:
        x = todo.pop()
        if x not in succ and x not in pred:
            continue
        if len(pred[x]) != 1 or len(succ[x]) != 1:
            continue
        (u,), (v,) = pred[x], succ[x]
        if mult[(u, x)] != 1 or mult[(x, v)] != 1:
            continue
        del mult[(u, x)], mult[(x, v)]
        succ[u].discard(x)
        pred[v].discard(x)
        del succ[x], pred[x]
        # parallel reduction is implicit: multiplicity collapses to one edge
        mult[(u, v)] = 1
        succ[u].add(v)
        pred[v].add(u)
        todo.extend(n for n in (u, v) if n not in (START, END))
    return set(mult) == {(START, END)}
