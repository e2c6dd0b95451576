import json
import logging
import re
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asyncplan.duration import CanonicalDuration, Duration, TimeUnit, unit_distance
from asyncplan.errors import AssemblyError, GenerationError, ValidationError
from asyncplan.plan import END, START, Constraint, PlanDag, build_dag, complexity, is_series_parallel, transitive_reduce
from asyncplan.scheduler import enumerate_paths_oracle, longest_path, optimal_makespan
from asyncplan.synth import (
    GenConfig,
    Instance,
    assemble_dataset,
    consistency_vote,
    gen_plan,
    gen_prototypical_batch,
    gen_prototypical_instance,
    gen_sp_dag,
    generate_instances,
    keyword_filter,
    prototypical_prompt,
    stratified_targets,
)

from .oracles import longest_by_negated_shortest


def rng(seed=0):
    return np.random.default_rng(seed)


def test_smallest_instance():
    dag = gen_sp_dag(5, rng=rng())
    assert len(dag.nodes) == 3 and len(dag.edges) == 2


def test_target_fourteen_is_series_parallel():
    for seed in range(20):
        dag = gen_sp_dag(14, rng=rng(seed))
        assert complexity(dag) == 14
        assert is_series_parallel(dag)


def test_six_is_bumped_with_warning(caplog):
    with caplog.at_level(logging.WARNING, logger="asyncplan"):
        dag = gen_sp_dag(6, rng=rng())
    assert complexity(dag) == 7
    assert "not buildable" in caplog.text


def test_unreachable_target():
    with pytest.raises(GenerationError):
        gen_sp_dag(4, rng=rng())


@settings(max_examples=60)
@given(st.integers(5, 100), st.integers(0, 2**32 - 1), st.floats(0.05, 0.95))
def test_generated_dags_are_valid(target, seed, bias):
    dag = gen_sp_dag(target, GenConfig(complexity_range=(5, 100), series_bias=bias), rng(seed))
    assert complexity(dag) == (7 if target == 6 else target)
    assert is_series_parallel(dag)
    inner = [(u, v) for u, v in dag.edges if u != START and v != END]
    assert list(transitive_reduce(inner)) == sorted(Constraint(u, v) for u, v in inner)
    # numbered in topological order
    assert all(u < v for u, v in inner)
    assert sorted(dag.steps) == list(range(1, len(dag.steps) + 1))


def test_histogram_uniform():
    insts = generate_instances(1000, GenConfig(complexity_range=(10, 40)), seed=3)
    counts = Counter(i.complexity for i in insts)
    expected = 1000 / 31
    assert set(counts) == set(range(10, 41))
    assert all(abs(n - expected) <= 0.1 * expected for n in counts.values())


def test_stratified_targets():
    t = stratified_targets(100, 10, 40)
    counts = Counter(t).values()
    assert max(counts) - min(counts) <= 1 and len(t) == 100


def test_gen_plan_texts():
    plan = gen_plan(20, rng=rng(1))
    assert all(re.fullmatch(r"Carry out part \d+ of the job to .+\.", s.text) for s in plan.steps)
    assert complexity(build_dag(plan)) == 20


def test_unit_pool_respected():
    cfg = GenConfig(units=((TimeUnit.H, 1.0), (TimeUnit.DAY, 1.0)), mixed_unit_rate=0.5)
    for seed in range(10):
        dag = gen_sp_dag(30, cfg, rng(seed))
        assert {d.unit for d in dag.durations.values()} <= {TimeUnit.H, TimeUnit.DAY}
    single = GenConfig(units=((TimeUnit.MIN, 1.0),))
    assert unit_distance(gen_sp_dag(30, single, rng()).durations.values()) == 0


@pytest.mark.parametrize(
    "kwargs",
    [{"complexity_range": (4, 10)}, {"complexity_range": (10, 101)}, {"complexity_range": (20, 10)},
     {"values": ()}, {"units": ()}, {"series_bias": 1.5}],
)
def test_config_validation(kwargs):
    with pytest.raises(ValidationError):
        GenConfig(**kwargs)


def test_config_json_roundtrip():
    cfg = GenConfig(complexity_range=(12, 30), series_bias=0.3, seed=5)
    assert GenConfig.from_json(json.loads(json.dumps(cfg.to_json()))) == cfg


def test_instances_independent_of_jobs():
    a = generate_instances(12, seed=7, jobs=1)
    b = generate_instances(12, seed=7, jobs=3)
    assert [x.to_row() for x in a] == [x.to_row() for x in b]
    assert a[0].to_row() != generate_instances(1, seed=8)[0].to_row()


def test_instance_invariants_and_row_roundtrip():
    for inst in generate_instances(20, seed=2):
        assert inst.gold == optimal_makespan(inst.dag)
        assert inst.complexity == complexity(inst.dag)
        assert set(inst.graphs) == {"adjacency_list", "edge_list", "adjacency_matrix", "csr"}
        back = Instance.from_row(json.loads(json.dumps(inst.to_row())))
        assert back.plan == inst.plan and back.gold == inst.gold


def test_tampered_row_rejected():
    row = generate_instances(1, seed=2)[0].to_row()
    row["gold_seconds"] += 1
    with pytest.raises(ValidationError):
        Instance.from_row(row)


def test_prototypical_chain():
    text = prototypical_prompt(3, [(0, 1, 1), (1, 2, 1)])
    assert "[0, 1, 2]" in text and "[[0, 1, 1], [1, 2, 1]]" in text
    assert "from node 0 to node 2?" in text
    assert longest_path([(0, 1, 1), (1, 2, 1)], 0, 2)[0] == 2


def test_prototypical_instance_shape():
    prompt, gold = gen_prototypical_instance(20, rng(4))
    assert prompt.startswith("The following lists of nodes [0, ")
    assert prompt.endswith("tags.\nAnswer:")
    assert isinstance(gold, int) and gold > 0


def test_prototypical_golds_match_oracles():
    for inst in gen_prototypical_batch(150, 10, 30, seed=11):
        n = inst.n_nodes - 1
        # relabel as a plan DAG: node 0 is START, n is END, a node's weight sits on its out-edges
        weights = {u: w for u, _, w in inst.edges}
        assert all(w == weights[u] for u, _, w in inst.edges)
        assert all(1 <= w <= 10 for w in weights.values())
        durs = {u: Duration(weights[u], TimeUnit.SEC) for u in range(1, n)}
        name = {0: START, n: END}
        dag = PlanDag(durs, tuple((name.get(u, u), name.get(v, v)) for u, v, _ in inst.edges))
        best = max(w for _, w in enumerate_paths_oracle(dag)).seconds
        assert inst.gold == best + weights[0]
        assert inst.gold == longest_by_negated_shortest(dag) + weights[0]
        assert inst.complexity == complexity(dag)


def test_prototypical_batch_counts():
    batch = gen_prototypical_batch(310, 10, 40, seed=0)
    counts = Counter(i.complexity for i in batch).values()
    assert max(counts) - min(counts) <= 1
    assert len({i.id for i in batch}) == 310


def test_vote_accepts_four_of_five():
    good = [(1, 2), (2, 3)]
    cands = [good, good, [(2, 3), (1, 2)], [(1, 2), (2, 3), (1, 3)], [(1, 3)]]
    assert consistency_vote(cands) == (Constraint(1, 2), Constraint(2, 3))


def test_vote_rejects_three():
    a, b = [(1, 2)], [(2, 1)]
    assert consistency_vote([a, a, a, b, b]) is None
    assert consistency_vote([a, a, a, b, b], threshold=3) == (Constraint(1, 2),)


def test_vote_skips_cycles_and_validates():
    cyc = [(1, 2), (2, 1)]
    assert consistency_vote([cyc] * 5) is None
    with pytest.raises(ValidationError):
        consistency_vote([])
    with pytest.raises(ValidationError):
        consistency_vote([[(1, 2)]], threshold=0)


@pytest.mark.parametrize(
    "text, passed, category, keyword",
    [
        ("Repeat until golden", False, "ongoing", "repeat"),
        ("Mix the batter.", True, None, None),
        ("Wait before serving", False, "interval", "before"),
        ("Stir WHILE hot", False, "parallel", "while"),
        ("Keep this warm", False, "ongoing", "keep"),
        ("Beat the eggs, then sift.", True, None, None),
        ("Iffy ingredients", True, None, None),
    ],
)
def test_keyword_filter(text, passed, category, keyword):
    r = keyword_filter(text)
    assert bool(r) is passed
    assert (r.category, r.keyword) == (category, keyword)


def _read(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_assemble_counts_and_determinism(tmp_path):
    insts = generate_instances(10, seed=5)
    kw = dict(regimes=["zero_shot"], templates=range(1, 11), economic=[False, True], seed=5)
    m = assemble_dataset(insts, tmp_path / "a", **kw)
    assemble_dataset(list(reversed(insts)), tmp_path / "b", **kw)
    assert m["n_prompts"] == 200
    assert sum(m["complexity_bins"].values()) == 10
    assert sum(m["complexity_counts"].values()) == 10
    assert _read(tmp_path / "a") == _read(tmp_path / "b")
    rows = [json.loads(line) for line in (tmp_path / "a" / "prompts.jsonl").read_text().splitlines()]
    assert len({r["id"] for r in rows}) == 200
    by_id = {i.id: i for i in insts}
    assert all(r["gold_seconds"] == by_id[r["instance_id"]].gold.seconds for r in rows)


def test_assemble_graph_formats(tmp_path):
    insts = generate_instances(2, seed=1)
    m = assemble_dataset(insts, tmp_path, regimes=["plag_explicit", "zero_shot"], graph_formats=["csr", "edge_list"])
    assert m["n_prompts"] == 2 * (2 + 1)


def test_assemble_rejects_collisions(tmp_path):
    inst = generate_instances(1, seed=1)[0]
    with pytest.raises(AssemblyError):
        assemble_dataset([inst, inst], tmp_path)


def test_assemble_rejects_bad_gold(tmp_path):
    inst = generate_instances(1, seed=1)[0]
    forged = Instance(inst.id, inst.plan, inst.dag, CanonicalDuration(inst.gold.seconds + 1), inst.complexity,
                      inst.graphs)
    with pytest.raises(AssemblyError):
        assemble_dataset([forged], tmp_path)
