"""``asyncplan`` command line: solve, gen, render, grade, stats, check.

Exit codes: 0 success, 1 I/O error, 2 validation or parse error,
3 solver size bound exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .duration import CanonicalDuration
from .errors import AsyncPlanError, JoinError, SizeError, ValidationError
from .evalstats import EvalRecord, compare_systems, format_table, grade, grade_completion
from .plan import Plan, build_dag, complexity
from .render import Regime, render_prompt
from .scheduler import (
    AnnealParams,
    critical_path,
    finite_makespan_exact,
    finite_makespan_heuristic,
    longest_path,
    optimal_makespan,
)
from .synth import (
    GenConfig,
    assemble_dataset,
    gen_prototypical_batch,
    generate_instances,
    make_instance,
)
from .textio import GraphFormat, parse_task_block

SEED_ENV = "ASYNCPLAN_SEED"


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _read_jsonl(path: str) -> list[dict]:
    rows = []
    for no, line in enumerate(_read_text(path).splitlines(), start=1):
        if line.strip():
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{no}: invalid JSON ({exc.msg})") from exc
    return rows


def _write(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _dumps_rows(rows: Iterable[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in rows)


def load_plans(path: str) -> list[tuple[str, Plan]]:
    """Plan JSON, dataset JSONL, or a rendered task block; returns ``(id, plan)`` pairs."""
    text = _read_text(path)
    stripped = text.lstrip()
    stem = Path(path).stem if path != "-" else "stdin"
    if stripped.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError:
            obj = None
        if isinstance(obj, dict):
            return [(str(obj.get("id", stem)), Plan.from_dict(obj.get("plan", obj)))]
        rows = _read_jsonl(path)
        return [(str(r["id"]), Plan.from_dict(r["plan"])) for r in rows]
    return [(stem, parse_task_block(text))]


def _seconds_json(x: Fraction):
    return int(x) if x.denominator == 1 else str(x)


# ---------------------------------------------------------------- solve


def cmd_solve(args) -> int:
    (_, plan), *rest = load_plans(args.input)
    if rest:
        raise ValidationError("solve expects a single plan")
    dag = build_dag(plan)
    out = {"task": plan.task, "complexity": complexity(dag)}
    if args.agents is None:
        gold = optimal_makespan(dag)
        out["critical_path"] = [n for n in critical_path(dag)]
    else:
        if args.method == "exact":
            sched = finite_makespan_exact(dag, args.agents, max_steps=args.max_steps)
        else:
            params = AnnealParams(iterations=args.iterations, seed=args.seed)
            sched = finite_makespan_heuristic(dag, args.agents, method=args.method, params=params)
        gold = sched.makespan
        out.update(agents=args.agents, method=args.method, schedule=sched.to_json())
    out["gold"] = dag.format_time(gold, args.style)
    out["gold_seconds"] = _seconds_json(gold.seconds)
    print(f'"{out["gold"]}"')
    print(json.dumps(out, sort_keys=True))
    return 0


# ---------------------------------------------------------------- gen


def _parse_range(text: str) -> tuple[int, int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
    else:
        lo = hi = text
    try:
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO..HI, got {text!r}") from None


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        raise ValidationError(f"gen needs --seed (or {SEED_ENV} in the environment)")
    try:
        return int(env)
    except ValueError:
        raise ValidationError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def cmd_gen(args) -> int:
    seed = _seed(args)
    lo, hi = args.complexity
    out = Path(args.out)
    if args.prototypical:
        batch = gen_prototypical_batch(args.count, lo, hi, seed)
        out.mkdir(parents=True, exist_ok=True)
        (out / "prototypical.jsonl").write_text(_dumps_rows(p.to_row() for p in batch), encoding="utf-8")
        counts = {}
        for p in batch:
            counts[str(p.complexity)] = counts.get(str(p.complexity), 0) + 1
        manifest = {
            "schema_version": 1,
            "kind": "prototypical",
            "seed": seed,
            "complexity_range": [lo, hi],
            "n_instances": len(batch),
            "complexity_counts": dict(sorted(counts.items(), key=lambda kv: int(kv[0]))),
            "files": {"dataset": "prototypical.jsonl"},
        }
        (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    else:
        config = GenConfig(complexity_range=(lo, hi), series_bias=args.series_bias, seed=seed)
        instances = generate_instances(args.count, config, seed, jobs=args.jobs)
        manifest = assemble_dataset(instances, out, config=config, seed=seed)
    print(json.dumps({"out": str(out), "n_instances": manifest["n_instances"]}, sort_keys=True))
    return 0


# ---------------------------------------------------------------- render


def _templates(values: Sequence[str]) -> list[int]:
    if not values:
        return [2]
    if "all" in values:
        return list(range(1, 11))
    return [int(v) for v in values]


def _economic(value: str) -> list[bool]:
    return {"off": [False], "on": [True], "both": [False, True]}[value]


def cmd_render(args) -> int:
    plans = load_plans(args.input)
    regimes = [Regime(r) for r in (args.regime or ["zero_shot"])]
    formats = [GraphFormat(g) for g in (args.graph or [])]
    rows = []
    for iid, plan in plans:
        inst = make_instance(plan, iid, "imported")
        for regime in regimes:
            fmts = formats if regime.needs_graph else [None]
            if regime.needs_graph and not fmts:
                raise ValidationError(f"regime {regime.value} needs --graph")
            for t in _templates(args.template):
                for e in _economic(args.economic):
                    for f in fmts:
                        p = render_prompt(plan, regime, t, e, f, instance_id=iid)
                        rows.append(
                            p.to_row(
                                complexity=inst.complexity,
                                gold=inst.dag.format_time(inst.gold),
                                gold_seconds=_seconds_json(inst.gold.seconds),
                            )
                        )
    rows.sort(key=lambda r: r["id"])
    if args.text:
        _write(args.out, "\n\n".join(r["prompt"] for r in rows) + "\n")
    else:
        _write(args.out, _dumps_rows(rows))
    return 0


# ---------------------------------------------------------------- grade


def pair_key(row: dict) -> str:
    """Identifier shared by all regimes for one instance/template/phrasing combination."""
    econ = "econ" if row.get("economic") else "plain"
    return f"{row['instance_id']}:t{row.get('template', 2)}:{econ}"


def system_name(row: dict) -> str:
    fmt = row.get("graph_format")
    return row["regime"] + (f"[{fmt}]" if fmt else "")


def _grade_one(item) -> dict:
    row, completion = item
    rec = grade_completion(
        row["id"],
        completion,
        CanonicalDuration(Fraction(str(row["gold_seconds"]))),
        int(row["complexity"]),
        system=system_name(row),
        instance_id=pair_key(row),
    )
    return rec.to_row()


def cmd_grade(args) -> int:
    prompts = {r["id"]: r for r in _read_jsonl(args.prompts)}
    completions = {}
    for r in _read_jsonl(args.completions):
        if "id" not in r or "completion" not in r:
            raise ValidationError("completion rows need 'id' and 'completion'")
        completions[str(r["id"])] = r["completion"] or ""
    missing = sorted(set(prompts) - set(completions))
    unknown = sorted(set(completions) - set(prompts))
    if missing or unknown:
        raise JoinError(missing, unknown)
    work = [(prompts[i], completions[i]) for i in sorted(prompts)]
    if args.jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_grade_one, work, chunksize=64))
    else:
        rows = [_grade_one(w) for w in work]
    _write(args.out, _dumps_rows(rows))
    if args.out not in (None, "-"):
        report = grade(EvalRecord.from_row(r) for r in rows)
        print(json.dumps({"n": report.n, "correct": report.correct, "accuracy": report.accuracy}, sort_keys=True))
    return 0


# ---------------------------------------------------------------- stats


def cmd_stats(args) -> int:
    by_system: dict[str, list[EvalRecord]] = {}
    for row in _read_jsonl(args.records):
        rec = EvalRecord.from_row(row)
        by_system.setdefault(rec.system or "default", []).append(rec)
    pairs = None
    if args.pair:
        pairs = [tuple(p.split(",", 1)) for p in args.pair]
        for a, b in pairs:
            for s in (a, b):
                if s not in by_system:
                    raise ValidationError(f"unknown system {s!r}; have {sorted(by_system)}")
    report = compare_systems(by_system, pairs=pairs, alpha=args.alpha, exclude_invalid=args.exclude_invalid)
    if args.out:
        Path(args.out).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(format_table(report))
    return 0


# ---------------------------------------------------------------- check


def cmd_check(args) -> int:
    bad = []
    n = 0
    for row in _read_jsonl(args.dataset):
        n += 1
        if "plan" in row:
            inst = make_instance(Plan.from_dict(row["plan"]), str(row["id"]), row.get("provenance", "imported"))
            if Fraction(str(row["gold_seconds"])) != inst.gold.seconds or row.get("complexity") != inst.complexity:
                bad.append(row["id"])
        elif "edges" in row:
            last = len(row["nodes"]) - 1
            gold, _ = longest_path([tuple(e) for e in row["edges"]], 0, last)
            if gold != row["gold"]:
                bad.append(row["id"])
        else:
            raise ValidationError(f"row {row.get('id')!r} has neither a plan nor an edge list")
    print(json.dumps({"checked": n, "mismatched": bad[:20], "n_mismatched": len(bad)}, sort_keys=True))
    if bad:
        raise ValidationError(f"{len(bad)} row(s) disagree with the solver")
    return 0


# ---------------------------------------------------------------- wiring


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="asyncplan", description="Asynchronous plan solving and benchmark tooling.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="optimal completion time of one plan")
    s.add_argument("input", help="Plan JSON, dataset row, or task-block text ('-' for stdin)")
    s.add_argument("--agents", "-k", type=int, help="number of agents; omit for unlimited")
    s.add_argument("--method", choices=["exact", "list", "anneal"], default="exact")
    s.add_argument("--style", choices=["largest-unit", "mixed"], default="largest-unit")
    s.add_argument("--max-steps", type=int, default=12, help="size bound for the exact solver")
    s.add_argument("--iterations", type=int, default=2000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_solve)

    g = sub.add_parser("gen", help="generate a dataset and manifest")
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--complexity", type=_parse_range, default=(10, 40), help="LO..HI (default 10..40)")
    g.add_argument("--seed", type=int, help=f"master seed (default: ${SEED_ENV})")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--prototypical", action="store_true", help="pure longest-path instances")
    g.add_argument("--series-bias", type=float, default=0.5)
    g.add_argument("--jobs", type=int, default=1)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("render", help="render prompts as JSONL")
    r.add_argument("input", help="Plan JSON, dataset JSONL, or task-block text")
    r.add_argument("--regime", action="append", choices=[x.value for x in Regime])
    r.add_argument("--template", action="append", help="1..10 or 'all' (repeatable; default 2)")
    r.add_argument("--economic", choices=["off", "on", "both"], default="off")
    r.add_argument("--graph", action="append", choices=[x.value for x in GraphFormat])
    r.add_argument("--out", help="output file (default stdout)")
    r.add_argument("--text", action="store_true", help="write bare prompt text instead of JSONL")
    r.set_defaults(func=cmd_render)

    gr = sub.add_parser("grade", help="join prompts with completions into graded records")
    gr.add_argument("--prompts", required=True)
    gr.add_argument("--completions", required=True, help="JSONL rows {id, completion}")
    gr.add_argument("--out", help="records JSONL (default stdout)")
    gr.add_argument("--jobs", type=int, default=1)
    gr.set_defaults(func=cmd_grade)

    st = sub.add_parser("stats", help="accuracy by bin and paired significance tests")
    st.add_argument("records")
    st.add_argument("--alpha", type=float, default=0.05)
    st.add_argument("--exclude-invalid", action="store_true")
    st.add_argument("--pair", action="append", help="A,B system pair (repeatable)")
    st.add_argument("--out", help="report JSON path")
    st.set_defaults(func=cmd_stats)

    c = sub.add_parser("check", help="re-solve every dataset row and compare golds")
    c.add_argument("dataset")
    c.set_defaults(func=cmd_check)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except AsyncPlanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
