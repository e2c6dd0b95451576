"""Benchmark instance generation.

Naturalistic-style instances are random two-terminal series-parallel DAGs
built by recursive composition of *blocks* hanging between two terminals:

* an edge block is a single edge (value 1);
* a series block chains ``m + 1`` sub-blocks through ``m`` new steps
  (value = sum of parts + m);
* a parallel block joins at least two non-edge sub-blocks between the same
  terminals (value = sum of parts).

A block's value counts the nodes it creates plus its edges, so a plan built
from one top-level block has complexity ``value + 2`` (the two sentinels).
Values 2 and 4 cannot be built, hence complexity 6 is unreachable and is
replaced by 5 or 7. Forbidding bare edges inside parallel blocks keeps every
generated plan transitively reduced.
"""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import lru_cache
from heapq import heapify, heappop, heappush
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .duration import CanonicalDuration, Duration, TimeUnit, unit_distance
from .errors import AssemblyError, CycleError, GenerationError, ValidationError
from .plan import END, START, Constraint, Plan, PlanDag, Step, build_dag, complexity, transitive_reduce
from .render import ExemplarBank, Regime, render_prompt
from .scheduler import longest_path, optimal_makespan
from .textio import GraphFormat, all_serializations, format_edge_list

__all__ = [
    "SCHEMA_VERSION",
    "GenConfig",
    "Instance",
    "FilterResult",
    "PrototypicalInstance",
    "gen_sp_dag",
    "gen_plan",
    "generate_instances",
    "gen_prototypical_instance",
    "gen_prototypical_batch",
    "prototypical_prompt",
    "consistency_vote",
    "keyword_filter",
    "make_instance",
    "assemble_dataset",
    "stratified_targets",
]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

DEFAULT_VALUES = (1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 25, 30, 40, 45, 60)
DEFAULT_UNITS = (
    ("sec", 0.05),
    ("min", 0.55),
    ("h", 0.2),
    ("day", 0.12),
    ("week", 0.04),
    ("month", 0.03),
    ("year", 0.01),
)
TASKS = (
    "assemble a bookshelf",
    "plant a vegetable bed",
    "bake a loaf of bread",
    "repaint a fence",
    "set up a home network",
    "organize a garage sale",
    "prepare a picnic",
    "restore an old chair",
)


@dataclass(frozen=True)
class GenConfig:
    complexity_range: tuple[int, int] = (10, 40)
    values: tuple[int, ...] = DEFAULT_VALUES
    units: tuple[tuple[str, float], ...] = DEFAULT_UNITS
    series_bias: float = 0.5
    depth_cap: int = 6
    mixed_unit_rate: float = 0.2
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.complexity_range
        units = tuple((n.label if isinstance(n, TimeUnit) else n, w) for n, w in self.units)
        object.__setattr__(self, "units", units)
        if not 5 <= lo <= hi <= 100:
            raise ValidationError(f"complexity range must lie within [5, 100], got {self.complexity_range}")
        if not self.values or any(v <= 0 for v in self.values):
            raise ValidationError("duration value pool must be nonempty and positive")
        if not self.units or any(w < 0 for _, w in self.units) or sum(w for _, w in self.units) <= 0:
            raise ValidationError("unit pool must be nonempty with positive total weight")
        for name, _ in self.units:
            Duration.parse(f"1 {name}")
        if not 0 <= self.series_bias <= 1 or not 0 <= self.mixed_unit_rate <= 1:
            raise ValidationError("series_bias and mixed_unit_rate must lie in [0, 1]")
        if self.depth_cap < 1:
            raise ValidationError("depth_cap must be at least 1")
        object.__setattr__(self, "complexity_range", (int(lo), int(hi)))
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        object.__setattr__(self, "units", tuple((str(n), float(w)) for n, w in self.units))

    def unit_pool(self) -> tuple[list[TimeUnit], np.ndarray]:
        units = [Duration.parse(f"1 {n}").unit for n, _ in self.units]
        w = np.array([w for _, w in self.units], dtype=float)
        return units, w / w.sum()

    def to_json(self) -> dict:
        d = asdict(self)
        d["complexity_range"] = list(self.complexity_range)
        d["values"] = list(self.values)
        d["units"] = [list(u) for u in self.units]
        return d

    @classmethod
    def from_json(cls, obj: Mapping) -> "GenConfig":
        obj = dict(obj)
        if "complexity_range" in obj:
            obj["complexity_range"] = tuple(obj["complexity_range"])
        if "values" in obj:
            obj["values"] = tuple(obj["values"])
        if "units" in obj:
            obj["units"] = tuple(tuple(u) for u in obj["units"])
        return cls(**obj)


# ---------------------------------------------------------------- SP blocks


def _buildable(value: int) -> bool:
    return value in (1, 3) or value >= 5


@lru_cache(maxsize=None)
def _splittable(total: int, parts: int, least: int) -> bool:
    """Can ``total`` be written as ``parts`` buildable values, each >= least?"""
    if parts == 0:
        return total == 0
    return any(
        _buildable(v) and _splittable(total - v, parts - 1, least)
        for v in range(least, total - least * (parts - 1) + 1)
    )


def _random_split(total: int, parts: int, least: int, rng: np.random.Generator) -> list[int]:
    out = []
    for left in range(parts, 1, -1):
        options = [
            v
            for v in range(least, total - least * (left - 1) + 1)
            if _buildable(v) and _splittable(total - v, left - 1, least)
        ]
        v = int(options[rng.integers(len(options))])
        out.append(v)
        total -= v
    out.append(total)
    return out


def _series_shapes(value: int) -> list[int]:
    # m junctions, m + 1 parts, parts sum to value - m
    return [m for m in range(1, (value - 1) // 2 + 1) if _splittable(value - m, m + 1, 1)]


def _parallel_shapes(value: int) -> list[int]:
    return [q for q in range(2, value // 3 + 1) if _splittable(value, q, 3)]


def _flat_block(value: int):
    """Depth-capped fallback: a chain, plus one two-step diamond when ``value`` is even."""
    if value % 2:
        m = (value - 1) // 2
        return ("S", [("E",)] * (m + 1))
    diamond = ("P", [("S", [("E",), ("E",)]), ("S", [("E",), ("E",)])])
    m = (value - 6) // 2
    return diamond if m == 0 else ("S", [diamond] + [("E",)] * m)


def _block(value: int, depth: int, config: GenConfig, rng: np.random.Generator):
    if value == 1:
        return ("E",)
    if depth >= config.depth_cap:
        return _flat_block(value)
    series = _series_shapes(value)
    parallel = _parallel_shapes(value)
    use_series = bool(series) and (not parallel or rng.random() < config.series_bias)
    if use_series:
        m = series[rng.integers(min(len(series), 4))] if depth == 0 else series[rng.integers(len(series))]
        parts = _random_split(value - m, m + 1, 1, rng)
    else:
        q = parallel[rng.integers(min(len(parallel), 3))]
        parts = _random_split(value, q, 3, rng)
    kind = "S" if use_series else "P"
    return (kind, [_block(p, depth + 1, config, rng) for p in parts])


def _emit(block, u, v, edges: list, counter: list):
    kind = block[0]
    if kind == "E":
        edges.append((u, v))
    elif kind == "P":
        for child in block[1]:
            _emit(child, u, v, edges, counter)
    else:
        children = block[1]
        prev = u
        for i, child in enumerate(children):
            if i == len(children) - 1:
                nxt = v
            else:
                counter[0] += 1
                nxt = counter[0]
            _emit(child, prev, nxt, edges, counter)
            prev = nxt


def _topological_relabel(edges: list[tuple]) -> list[tuple]:
    """Renumber steps 1..n in a topological order (ties by creation id)."""
    succ: dict = {}
    indeg: Counter = Counter()
    for u, v in edges:
        succ.setdefault(u, []).append(v)
        indeg[v] += 1
    heap = [n for n in succ.get(START, ()) if indeg[n] == 1 and n != END]
    heapify(heap)
    order = []
    while heap:
        node = heappop(heap)
        order.append(node)
        for nxt in succ.get(node, ()):
            indeg[nxt] -= 1
            if indeg[nxt] == 0 and nxt != END:
                heappush(heap, nxt)
    new = {n: i for i, n in enumerate(order, start=1)}
    new[START], new[END] = START, END
    return [(new[u], new[v]) for u, v in edges]


def _sample_durations(n: int, config: GenConfig, rng: np.random.Generator) -> dict[int, Duration]:
    units, probs = config.unit_pool()
    base = units[rng.choice(len(units), p=probs)]
    out = {}
    for i in range(1, n + 1):
        unit = units[rng.choice(len(units), p=probs)] if rng.random() < config.mixed_unit_rate else base
        value = config.values[rng.integers(len(config.values))]
        out[i] = Duration(value, unit)
    return out


def _achievable(target: int) -> int:
    if target < 5:
        raise GenerationError(f"complexity {target} is below the smallest plan (5)")
    return target if target != 6 else 7


def _sp_edges(target: int, config: GenConfig, rng: np.random.Generator) -> list[tuple]:
    value = _achievable(target) - 2
    block = _block(value, 0, config, rng)
    edges: list = []
    counter = [0]
    _emit(block, START, END, edges, counter)
    return _topological_relabel(edges)


def gen_sp_dag(target: int, config: GenConfig | None = None, rng: np.random.Generator | None = None,
               task: str = "") -> PlanDag:
    """Random series-parallel plan DAG with complexity ``target``.

    Complexity 6 cannot be built; 7 is produced instead and a warning logged.
    """
    config = config or GenConfig()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    got = _achievable(target)
    if got != target:
        log.warning("complexity %d is not buildable; generated %d", target, got)
    edges = _sp_edges(target, config, rng)
    n = max(x for e in edges for x in e if isinstance(x, int))
    dag = PlanDag(_sample_durations(n, config, rng), tuple(edges), task=task)
    if complexity(dag) != got:
        raise GenerationError(f"internal: built complexity {complexity(dag)} for target {got}")
    return dag


def gen_plan(target: int, config: GenConfig | None = None, rng: np.random.Generator | None = None) -> Plan:
    """A :class:`Plan` with schematic step texts around :func:`gen_sp_dag`."""
    rng = rng if rng is not None else np.random.default_rng((config or GenConfig()).seed)
    task = TASKS[rng.integers(len(TASKS))]
    dag = gen_sp_dag(target, config, rng, task=task)
    steps = tuple(Step(i, f"Carry out part {i} of the job to {task}.", d) for i, d in dag.durations.items())
    return Plan(task, steps, dag.constraints)


def stratified_targets(count: int, lo: int, hi: int) -> list[int]:
    """Round-robin over ``lo..hi`` so per-level counts differ by at most one."""
    span = hi - lo + 1
    return [lo + i % span for i in range(count)]


# ---------------------------------------------------------------- instances


@dataclass(frozen=True)
class Instance:
    id: str
    plan: Plan
    dag: PlanDag
    gold: CanonicalDuration
    complexity: int
    graphs: Mapping[str, str]
    provenance: str = "synthetic"

    def to_row(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "provenance": self.provenance,
            "complexity": self.complexity,
            "gold": self.dag.format_time(self.gold),
            "gold_seconds": _seconds_json(self.gold.seconds),
            "unit_distance": unit_distance(self.plan.durations.values()),
            "plan": self.plan.to_dict(),
            "graphs": dict(self.graphs),
        }

    @classmethod
    def from_row(cls, row: Mapping) -> "Instance":
        inst = make_instance(Plan.from_dict(row["plan"]), str(row["id"]), row.get("provenance", "imported"))
        if "gold_seconds" in row and Fraction(str(row["gold_seconds"])) != inst.gold.seconds:
            raise ValidationError(f"instance {inst.id}: stored gold disagrees with the solver")
        return inst


def _seconds_json(x: Fraction):
    return int(x) if x.denominator == 1 else str(x)


def make_instance(plan: Plan, id: str, provenance: str = "synthetic") -> Instance:
    if provenance not in ("synthetic", "imported"):
        raise ValidationError(f"unknown provenance {provenance!r}")
    dag = build_dag(plan)
    return Instance(id, plan, dag, optimal_makespan(dag), complexity(dag), all_serializations(dag), provenance)


def _one_instance(args) -> Instance:
    index, seed, target, config = args
    rng = np.random.default_rng([seed, index])
    plan = gen_plan(target, config, rng)
    return make_instance(plan, f"syn-{seed}-{index:05d}")


def generate_instances(count: int, config: GenConfig | None = None, seed: int | None = None,
                       jobs: int = 1) -> list[Instance]:
    """``count`` instances with stratified complexities.

    Instance ``i`` draws from its own generator seeded by ``(seed, i)``, so the
    output does not depend on ``jobs``.
    """
    config = config or GenConfig()
    seed = config.seed if seed is None else seed
    lo, hi = config.complexity_range
    work = [(i, seed, t, config) for i, t in enumerate(stratified_targets(count, lo, hi))]
    if jobs > 1 and count > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_one_instance, work, chunksize=max(1, count // (4 * jobs))))
    return [_one_instance(w) for w in work]


# ---------------------------------------------------------------- prototypical


PROTOTYPICAL_PROMPT = (
    "The following lists of nodes {nodes} and edges {edges} define a directed acyclic graph. "
    "Each element in the list of edges is expressed in the form (i,j,w), and specifies that node i "
    "connects to node j with weight w. What is the length of the longest path from node 0 to node {last}? "
    "Think step by step and then reply with the numerical value of the shortest path enclosed by "
    "<result><result> tags.\nAnswer:"
)


@dataclass(frozen=True)
class PrototypicalInstance:
    id: str
    complexity: int
    n_nodes: int
    edges: tuple[tuple[int, int, int], ...]
    gold: int

    @property
    def prompt(self) -> str:
        return prototypical_prompt(self.n_nodes, self.edges)

    def to_row(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "complexity": self.complexity,
            "nodes": list(range(self.n_nodes)),
            "edges": [list(e) for e in self.edges],
            "gold": self.gold,
            "prompt": self.prompt,
        }


def prototypical_prompt(n_nodes: int, edges: Iterable[tuple[int, int, int]]) -> str:
    nodes = "[" + ", ".join(str(i) for i in range(n_nodes)) + "]"
    return PROTOTYPICAL_PROMPT.format(nodes=nodes, edges=format_edge_list(edges), last=n_nodes - 1)


def _prototypical(index: int, target: int, rng: np.random.Generator, config: GenConfig) -> PrototypicalInstance:
    edges = _sp_edges(target, config, rng)
    n = max(x for e in edges for x in e if isinstance(x, int))
    ids = {START: 0, END: n + 1}
    weight = {i: int(rng.integers(1, 11)) for i in range(n + 1)}
    triples = tuple(sorted((ids.get(u, u), ids.get(v, v), weight[ids.get(u, u)]) for u, v in edges))
    gold, _ = longest_path(triples, 0, n + 1)
    return PrototypicalInstance(f"proto-{index:05d}", (n + 2) + len(triples), n + 2, triples, int(gold))


def gen_prototypical_instance(complexity: int, rng: np.random.Generator | None = None,
                              config: GenConfig | None = None) -> tuple[str, int]:
    """Prompt text and integer gold for one pure longest-path question.

    Nodes are ``0..n`` with 0 the source and ``n`` the sink; every edge carries
    the integer weight (1 to 10) of the node it leaves.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    inst = _prototypical(0, complexity, rng, config or GenConfig())
    return inst.prompt, inst.gold


def gen_prototypical_batch(count: int, lo: int = 10, hi: int = 40, seed: int = 0,
                           config: GenConfig | None = None) -> list[PrototypicalInstance]:
    config = config or GenConfig(complexity_range=(lo, hi), seed=seed)
    return [
        _prototypical(i, t, np.random.default_rng([seed, i]), config)
        for i, t in enumerate(stratified_targets(count, lo, hi))
    ]


# ---------------------------------------------------------------- pipeline stages


def consistency_vote(candidates: Sequence[Iterable], threshold: int = 4) -> tuple[Constraint, ...] | None:
    """Edge set agreed on by at least ``threshold`` candidates, else ``None``.

    Candidates are compared after transitive reduction; cyclic candidates
    cannot describe a plan and never count towards agreement.
    """
    if not candidates:
        raise ValidationError("consistency_vote needs at least one candidate")
    if threshold < 1:
        raise ValidationError("threshold must be at least 1")
    votes: Counter = Counter()
    first: dict = {}
    for k, cand in enumerate(candidates):
        try:
            key = transitive_reduce(cand)
        except CycleError:
            continue
        votes[key] += 1
        first.setdefault(key, k)
    if not votes:
        return None
    best = max(votes, key=lambda s: (votes[s], -first[s]))
    return best if votes[best] >= threshold else None


KEYWORDS = {
    "context-dependent": ("this", "above", "below"),
    "ongoing": ("keep", "know", "knowing", "become", "be", "stay", "repeat"),
    "optional": ("opt", "if"),
    "parallel": ("when", "while"),
    "interval": ("after", "before"),
}
_CATEGORY = {w: cat for cat, words in KEYWORDS.items() for w in words}
_KEYWORD_RE = re.compile(r"\b(" + "|".join(sorted(_CATEGORY, key=len, reverse=True)) + r")\b", re.IGNORECASE)


@dataclass(frozen=True)
class FilterResult:
    passed: bool
    category: str | None = None
    keyword: str | None = None

    def __bool__(self) -> bool:
        return self.passed


def keyword_filter(text: str) -> FilterResult:
    """Reject scripts containing an excluded keyword (whole word, any case); the earliest hit is reported."""
    m = _KEYWORD_RE.search(text)
    if m is None:
        return FilterResult(True)
    word = m.group(1).lower()
    return FilterResult(False, _CATEGORY[word], word)


# ---------------------------------------------------------------- assembly


def _bin_label(c: int, width: int = 2) -> str:
    lo = (c // width) * width
    return f"{lo}-{lo + width}"


def _dump(rows: Iterable[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in rows)


def assemble_dataset(
    instances: Sequence[Instance],
    out_dir: str | Path,
    regimes: Sequence[Regime | str] = (),
    templates: Sequence[int] = (2,),
    economic: Sequence[bool] = (False,),
    graph_formats: Sequence[GraphFormat | str] = tuple(GraphFormat),
    config: GenConfig | None = None,
    seed: int | None = None,
    bank: ExemplarBank | None = None,
) -> dict:
    """Write ``dataset.jsonl``, ``prompts.jsonl`` (when regimes are given) and ``manifest.json``.

    Every gold is recomputed before writing; duplicate instance or prompt ids
    raise :class:`AssemblyError`. Returns the manifest.
    """
    out = Path(out_dir)
    ids = [inst.id for inst in instances]
    dupes = sorted(i for i, n in Counter(ids).items() if n > 1)
    if dupes:
        raise AssemblyError(f"duplicate instance ids: {dupes[:5]}")
    for inst in instances:
        if optimal_makespan(build_dag(inst.plan)) != inst.gold:
            raise AssemblyError(f"instance {inst.id}: gold does not match the solver")

    rows = []
    for inst in sorted(instances, key=lambda i: i.id):
        for regime in regimes:
            regime = Regime(regime)
            fmts = list(graph_formats) if regime.needs_graph else [None]
            for t in templates:
                for e in economic:
                    for f in fmts:
                        p = render_prompt(inst.plan, regime, t, e, f, bank, inst.id)
                        rows.append(
                            p.to_row(
                                complexity=inst.complexity,
                                gold=inst.dag.format_time(inst.gold),
                                gold_seconds=_seconds_json(inst.gold.seconds),
                            )
                        )
    prompt_dupes = sorted(i for i, n in Counter(r["id"] for r in rows).items() if n > 1)
    if prompt_dupes:
        raise AssemblyError(f"duplicate prompt ids: {prompt_dupes[:5]}")

    bins = Counter(_bin_label(inst.complexity) for inst in instances)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config": config.to_json() if config else None,
        "seed": seed,
        "n_instances": len(instances),
        "n_prompts": len(rows),
        "complexity_bins": {k: bins[k] for k in sorted(bins, key=lambda s: int(s.split("-")[0]))},
        "complexity_counts": {str(c): n for c, n in sorted(Counter(i.complexity for i in instances).items())},
        "prompt_options": {
            "regimes": [Regime(r).value for r in regimes],
            "templates": list(templates),
            "economic": list(economic),
            "graph_formats": [GraphFormat(f).value for f in graph_formats],
        },
        "files": {"dataset": "dataset.jsonl", "prompts": "prompts.jsonl" if rows else None},
    }
    out.mkdir(parents=True, exist_ok=True)
    (out / "dataset.jsonl").write_text(_dump(i.to_row() for i in sorted(instances, key=lambda i: i.id)), encoding="utf-8")
    if rows:
        (out / "prompts.jsonl").write_text(_dump(rows), encoding="utf-8")
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return manifest
