"""Makespans for plan DAGs.

With unlimited agents the optimal makespan is the longest START->END path
(:func:`optimal_makespan`). With ``k`` identical agents the problem is
P|prec|Cmax, which is NP-hard in general; :func:`finite_makespan_exact`
solves small instances exactly and :func:`finite_makespan_heuristic` offers
list scheduling and simulated annealing for the rest.

Schedules are non-preemptive and steps have no gaps or overlaps imposed
beyond the precedence constraints.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Hashable, Iterable, Sequence

import numpy as np

from .duration import CanonicalDuration, format_duration
from .errors import SizeError, ValidationError
from .plan import END, START, PlanDag

__all__ = [
    "ScheduledStep",
    "Schedule",
    "AnnealParams",
    "longest_path",
    "optimal_makespan",
    "critical_path",
    "enumerate_paths",
    "enumerate_paths_oracle",
    "finite_makespan_exact",
    "finite_makespan_heuristic",
    "list_schedule",
    "anneal_schedule",
    "total_work",
    "width",
]

log = logging.getLogger(__name__)


def _topo(nodes: Sequence[Hashable], succ) -> list:
    indeg = {n: 0 for n in nodes}
    for n in nodes:
        for m in succ.get(n, ()):
            indeg[m] += 1
    ready = [n for n in nodes if indeg[n] == 0]
    order = []
    while ready:
        n = ready.pop()
        order.append(n)
        for m in succ.get(n, ()):
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
    if len(order) != len(nodes):
        raise ValidationError("graph has a cycle")
    return order


def longest_path(edges: Iterable[tuple], source, target):
    """Longest ``source -> target`` path over weighted ``(u, v, w)`` edges.

    Topological-order dynamic programming, O(|V| + |E|). Returns
    ``(length, path)``; raises if ``target`` is unreachable.
    """
    succ = {}
    nodes = {source, target}
    for u, v, w in edges:
        succ.setdefault(u, []).append((v, w))
        nodes.update((u, v))
    plain = {u: [v for v, _ in vs] for u, vs in succ.items()}
    best = {source: 0}
    back = {}
    for u in _topo(list(nodes), plain):
        if u not in best:
            continue
        for v, w in succ.get(u, ()):
            cand = best[u] + w
            if v not in best or cand > best[v]:
                best[v] = cand
                back[v] = u
    if target not in best:
        raise ValidationError(f"{target!r} is unreachable from {source!r}")
    path = [target]
    while path[-1] != source:
        path.append(back[path[-1]])
    return best[target], path[::-1]


def optimal_makespan(dag: PlanDag) -> CanonicalDuration:
    """Shortest possible completion time with unlimited agents."""
    length, _ = longest_path(dag.weighted_edges(), START, END)
    return CanonicalDuration(length)


def critical_path(dag: PlanDag) -> list:
    return longest_path(dag.weighted_edges(), START, END)[1]


def enumerate_paths(succ, weight, source, target) -> list[tuple[tuple, Fraction]]:
    """Every source->target path with its length (exhaustive DFS)."""
    out = []
    stack = [(source, (source,), 0)]
    while stack:
        node, path, length = stack.pop()
        if node == target:
            out.append((path, length))
            continue
        for nxt in reversed(succ.get(node, ())):
            stack.append((nxt, path + (nxt,), length + weight(node, nxt)))
    return out


def enumerate_paths_oracle(dag: PlanDag, max_nodes: int | None = 16) -> list[tuple[tuple, CanonicalDuration]]:
    """Brute-force reference: all START->END paths with their lengths."""
    if max_nodes is not None and dag.n_nodes > max_nodes:
        raise SizeError(f"{dag.n_nodes} nodes exceeds the enumeration bound of {max_nodes}")
    return [
        (p, CanonicalDuration(w))
        for p, w in enumerate_paths(dag.successors, dag.weight, START, END)
    ]


def total_work(dag: PlanDag) -> Fraction:
    return sum((dag.node_seconds(s) for s in dag.steps), Fraction(0))


def width(dag: PlanDag) -> int:
    """Size of the largest antichain of steps (Dilworth via bipartite matching)."""
    steps = list(dag.steps)
    reach = {s: set() for s in steps}
    for u in reversed(dag.topological_order):
        if u in (START, END):
            continue
        for v in dag.successors[u]:
            if v != END:
                reach[u] |= {v} | reach[v]
    match = {}

    def augment(u, seen):
        for v in reach[u]:
            if v in seen:
                continue
            seen.add(v)
            if v not in match or augment(match[v], seen):
                match[v] = u
                return True
        return False

    matched = sum(augment(u, set()) for u in steps)
    return len(steps) - matched


@dataclass(frozen=True)
class ScheduledStep:
    step: int
    agent: int
    start: Fraction
    end: Fraction


@dataclass(frozen=True)
class Schedule:
    entries: tuple[ScheduledStep, ...]
    agents: int

    @property
    def makespan(self) -> CanonicalDuration:
        return CanonicalDuration(max((e.end for e in self.entries), default=Fraction(0)))

    def start_of(self, step: int) -> Fraction:
        return self._by_step()[step].start

    def _by_step(self):
        return {e.step: e for e in self.entries}

    def check(self, dag: PlanDag) -> None:
        """Raise ``ValidationError`` unless the schedule is feasible for ``dag``."""
        by = self._by_step()
        if set(by) != set(dag.steps):
            raise ValidationError("schedule does not cover exactly the plan's steps")
        for e in self.entries:
            if e.end - e.start != dag.node_seconds(e.step) or e.start < 0:
                raise ValidationError(f"step {e.step} has the wrong length")
            if not 0 <= e.agent < self.agents:
                raise ValidationError(f"step {e.step} uses unknown agent {e.agent}")
            for p in dag.predecessors[e.step]:
                if p != START and by[p].end > e.start:
                    raise ValidationError(f"step {e.step} starts before predecessor {p} ends")
        per_agent = {}
        for e in sorted(self.entries, key=lambda e: (e.agent, e.start)):
            prev = per_agent.get(e.agent)
            if prev is not None and prev.end > e.start:
                raise ValidationError(f"agent {e.agent} runs steps {prev.step} and {e.step} at once")
            per_agent[e.agent] = e

    def to_json(self) -> list[dict]:
        return [
            {"step": e.step, "agent": e.agent, "start_seconds": _json_num(e.start)}
            for e in sorted(self.entries, key=lambda e: (e.start, e.step))
        ]

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    def firing_sequence(self) -> list[tuple[Fraction, str, int]]:
        """Replay as transition firings: ``(time, "start" | "finish", step)``.

        Finishes sort before starts at equal times, so a step's token is
        released before a successor consumes it.
        """
        events = []
        for e in self.entries:
            events.append((e.start, 1, "start", e.step))
            events.append((e.end, 0, "finish", e.step))
        return [(t, kind, s) for t, _, kind, s in sorted(events)]

    def gantt(self, width: int = 48) -> str:
        total = self.makespan.seconds or 1
        lines = []
        for a in range(self.agents):
            row = [" "] * width
            for e in self.entries:
                if e.agent != a:
                    continue
                lo = int(e.start * width / total)
                hi = max(lo + 1, int(e.end * width / total))
                label = str(e.step)
                for i in range(lo, min(hi, width)):
                    row[i] = "="
                for i, ch in enumerate(label[: hi - lo]):
                    row[lo + i] = ch
            lines.append(f"agent {a} |{''.join(row)}|")
        lines.append(f"makespan {format_duration(self.makespan)}")
        return "\n".join(lines)


def _json_num(x: Fraction):
    x = Fraction(x)
    return int(x) if x.denominator == 1 else float(x)


def _tails(dag: PlanDag) -> dict:
    """Longest path from each step to END, the step's own duration included."""
    tail = {END: Fraction(0)}
    for u in reversed(dag.topological_order):
        if u == END:
            continue
        tail[u] = dag.node_seconds(u) + max(tail[v] for v in dag.successors[u])
    return tail


def _assign_agents(starts: dict, dag: PlanDag, k: int) -> Schedule:
    """Give each step the lowest-numbered agent that is free at its start."""
    free = [Fraction(0)] * k
    entries = []
    for s in sorted(starts, key=lambda s: (starts[s], s)):
        t = starts[s]
        agent = next(a for a in range(k) if free[a] <= t)
        end = t + dag.node_seconds(s)
        free[agent] = end
        entries.append(ScheduledStep(s, agent, t, end))
    return Schedule(tuple(entries), k)


def _check_k(k):
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise ValidationError(f"agent count must be a positive integer, got {k!r}")


def finite_makespan_exact(dag: PlanDag, k: int, max_steps: int | None = 12) -> Schedule:
    """Minimum-makespan schedule on ``k`` identical agents.

    Depth-first branch and bound over decision epochs. Some optimal schedule
    starts every step at time 0 or at the completion time of another step, so
    at each epoch the search chooses which subset of ready steps to launch
    (possibly none while others are still running) and then advances to the
    next completion. Each call carries a budget and returns either the exact
    remaining time or a lower bound that reaches the budget; both kinds of
    result are memoised per state ``(finished, running)``. The bound is
    ``max(critical path, remaining work / k)`` and the list schedule supplies
    the initial budget. Ties are broken by ascending step index.
    """
    _check_k(k)
    n = len(dag.steps)
    if max_steps is not None and n > max_steps:
        raise SizeError(f"{n} steps exceeds the exact-solver bound of {max_steps}")
    steps = list(dag.steps)
    dur = {s: dag.node_seconds(s) for s in steps}
    preds = {s: frozenset(p for p in dag.predecessors[s] if p != START) for s in steps}
    tail = _tails(dag)
    after = {s: tail[s] - dur[s] for s in steps}
    by_priority = sorted(steps, key=lambda s: (-tail[s], s))

    exact_memo: dict = {}
    bound_memo: dict = {}

    def lower_bound(done, running):
        busy = {s for s, _ in running}
        lb = max((rem + after[s] for s, rem in running), default=Fraction(0))
        work = sum((rem for _, rem in running), Fraction(0))
        for s in steps:
            if s not in done and s not in busy:
                lb = max(lb, tail[s])
                work += dur[s]
        return max(lb, work / k)

    def advance(done, running, launch):
        now = running + tuple((s, dur[s]) for s in launch)
        step_t = min(rem for _, rem in now)
        finished = frozenset(s for s, rem in now if rem == step_t)
        nxt = tuple(sorted((s, rem - step_t) for s, rem in now if rem != step_t))
        return done | finished, nxt, step_t

    def solve(done: frozenset, running: tuple, budget):
        """``(value, launches)`` with ``value < budget``, or ``(bound, None)`` with ``bound >= budget``."""
        if len(done) == n:
            return Fraction(0), ()
        key = (done, running)
        hit = exact_memo.get(key)
        if hit is not None:
            return hit if hit[0] < budget else (hit[0], None)
        lb = max(lower_bound(done, running), bound_memo.get(key, Fraction(0)))
        if lb >= budget:
            return lb, None
        busy = {s for s, _ in running}
        ready = [s for s in by_priority if s not in done and s not in busy and preds[s] <= done]
        free = k - len(running)
        best, best_seq = budget, None
        floor = None
        for size in range(min(free, len(ready)), -1, -1):
            if size == 0 and not running:
                continue
            for launch in combinations(ready, size):
                nxt_done, nxt_running, step_t = advance(done, running, launch)
                value, seq = solve(nxt_done, nxt_running, best - step_t)
                total = step_t + value
                if seq is not None:
                    best, best_seq = total, (tuple(sorted(launch)), *seq)
                    if best <= lb:
                        break
                elif best_seq is None:
                    floor = total if floor is None else min(floor, total)
            if best_seq is not None and best <= lb:
                break
        if best_seq is not None:
            exact_memo[key] = (best, best_seq)
            return best, best_seq
        bound = max(lb, floor if floor is not None else budget)
        bound_memo[key] = bound
        return bound, None

    fallback = list_schedule(dag, k)
    value, seq = solve(frozenset(), (), fallback.makespan.seconds)
    if seq is None:
        return fallback
    starts = {}
    done, running, t = frozenset(), (), Fraction(0)
    for launch in seq:
        for s in launch:
            starts[s] = t
        done, running, step_t = advance(done, running, launch)
        t += step_t
    sched = _assign_agents(starts, dag, k)
    log.debug("exact solver: %d exact and %d bounded states", len(exact_memo), len(bound_memo))
    return sched


def list_schedule(dag: PlanDag, k: int) -> Schedule:
    """Non-delay list scheduling with longest-remaining-path priority."""
    _check_k(k)
    tail = _tails(dag)
    steps = list(dag.steps)
    dur = {s: dag.node_seconds(s) for s in steps}
    preds = {s: {p for p in dag.predecessors[s] if p != START} for s in steps}
    done, running, starts = set(), [], {}
    t = Fraction(0)
    while len(done) < len(steps):
        ready = [s for s in steps if s not in starts and preds[s] <= done]
        ready.sort(key=lambda s: (-tail[s], s))
        for s in ready[: k - len(running)]:
            starts[s] = t
            running.append((t + dur[s], s))
        running.sort()
        t = running[0][0]
        while running and running[0][0] == t:
            done.add(running.pop(0)[1])
    return _assign_agents(starts, dag, k)


def _decode(order: Sequence[int], dag: PlanDag, k: int, dur, preds) -> tuple[Fraction, dict]:
    """Serial decoding: each step in order goes to the agent that frees up first."""
    free = [Fraction(0)] * k
    end = {}
    starts = {}
    for s in order:
        ready = max((end[p] for p in preds[s]), default=Fraction(0))
        a = min(range(k), key=lambda i: (free[i], i))
        t = max(ready, free[a])
        starts[s] = t
        end[s] = free[a] = t + dur[s]
    return max(end.values()), starts


@dataclass(frozen=True)
class AnnealParams:
    initial_temperature: float = 1.0
    cooling_rate: float = 0.995
    iterations: int = 2000
    seed: int = 0

    def __post_init__(self):
        if not self.initial_temperature > 0:
            raise ValidationError("initial temperature must be positive")
        if not 0 < self.cooling_rate < 1:
            raise ValidationError("cooling rate must lie strictly between 0 and 1")
        if self.iterations < 0:
            raise ValidationError("iterations must be non-negative")


def anneal_schedule(dag: PlanDag, k: int, params: AnnealParams = AnnealParams()) -> Schedule:
    """Simulated annealing over topological orders.

    A move takes one step and reinserts it at a random position between its
    last predecessor and first successor in the current order, which keeps the
    order topological. Moves are accepted by the Metropolis rule on the decoded
    makespan (temperature scaled by the mean step length). The best order seen
    is returned; the run is fully determined by ``params.seed``.
    """
    _check_k(k)
    rng = np.random.default_rng(params.seed)
    steps = list(dag.steps)
    dur = {s: dag.node_seconds(s) for s in steps}
    preds = {s: [p for p in dag.predecessors[s] if p != START] for s in steps}
    succs = {s: [v for v in dag.successors[s] if v != END] for s in steps}
    start_sched = list_schedule(dag, k)
    order = sorted(steps, key=lambda s: (start_sched.start_of(s), s))
    cost, _ = _decode(order, dag, k, dur, preds)
    best_order, best_cost = list(order), cost
    scale = float(sum(dur.values()) / len(steps))
    temp = params.initial_temperature
    for _ in range(params.iterations):
        if len(order) < 2:
            break
        i = int(rng.integers(len(order)))
        s = order[i]
        rest = order[:i] + order[i + 1:]
        pos = {x: j for j, x in enumerate(rest)}
        lo = max((pos[p] + 1 for p in preds[s]), default=0)
        hi = min((pos[v] for v in succs[s]), default=len(rest))
        j = int(rng.integers(lo, hi + 1))
        cand = rest[:j] + [s] + rest[j:]
        c_cost, _ = _decode(cand, dag, k, dur, preds)
        delta = float(c_cost - cost) / scale
        if delta <= 0 or rng.random() < math.exp(-delta / temp):
            order, cost = cand, c_cost
            if cost < best_cost:
                best_order, best_cost = list(order), cost
        temp *= params.cooling_rate
    _, starts = _decode(best_order, dag, k, dur, preds)
    sched = _assign_agents(starts, dag, k)
    return sched if sched.makespan <= start_sched.makespan else start_sched


def finite_makespan_heuristic(
    dag: PlanDag, k: int, method: str = "list_schedule", params: AnnealParams | None = None
) -> Schedule:
    if method in ("list", "list_schedule"):
        return list_schedule(dag, k)
    if method == "anneal":
        return anneal_schedule(dag, k, params or AnnealParams())
    raise ValidationError(f"unknown heuristic {method!r}")
