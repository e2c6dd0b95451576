"""Grading free-text answers and comparing systems.

An answer is the right-most double-quoted substring that parses as a
duration; it is correct iff it equals the gold makespan in canonical seconds.
Systems are compared pairwise with McNemar's test on discordant instances and
the resulting p-values are corrected with Holm's step-down procedure.
"""

from __future__ import annotations

import math
import re
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .duration import CanonicalDuration, Duration, format_duration, parse_total, unit_distance
from .errors import DurationParseError, ExtractionError, ValidationError
from .plan import Constraint

__all__ = [
    "EvalRecord",
    "PairedOutcome",
    "GradeReport",
    "HolmResult",
    "extract_answer",
    "grade_completion",
    "grade",
    "complexity_bin",
    "mcnemar",
    "mcnemar_exact",
    "holm_bonferroni",
    "edge_prf",
    "unit_distance_report",
    "compare_systems",
    "exclude_invalid_ids",
]

_QUOTED = re.compile(r'"([^"]*)"')


def extract_answer(text: str) -> CanonicalDuration:
    """Right-most double-quoted substring that parses as a duration, in seconds."""
    for m in reversed(list(_QUOTED.finditer(text or ""))):
        candidate = m.group(1).strip().rstrip(".").strip()
        try:
            return parse_total(candidate)
        except DurationParseError:
            continue
    raise ExtractionError("no double-quoted duration in completion")


@dataclass(frozen=True)
class EvalRecord:
    id: str
    complexity: int
    gold: CanonicalDuration
    completion: str
    extracted: CanonicalDuration | None
    correct: bool
    system: str = ""
    instance_id: str = ""

    @property
    def invalid(self) -> bool:
        """Empty completion, e.g. a content-filtered response."""
        return not (self.completion or "").strip()

    def to_row(self) -> dict:
        return {
            "id": self.id,
            "instance_id": self.instance_id or self.id,
            "system": self.system,
            "complexity": self.complexity,
            "gold_seconds": _num(self.gold.seconds),
            "extracted_seconds": None if self.extracted is None else _num(self.extracted.seconds),
            "correct": self.correct,
            "completion": self.completion,
        }

    @classmethod
    def from_row(cls, row: Mapping) -> "EvalRecord":
        ext = row.get("extracted_seconds")
        return cls(
            id=str(row["id"]),
            complexity=int(row["complexity"]),
            gold=CanonicalDuration(Fraction(str(row["gold_seconds"]))),
            completion=row.get("completion", ""),
            extracted=None if ext is None else CanonicalDuration(Fraction(str(ext))),
            correct=bool(row["correct"]),
            system=row.get("system", ""),
            instance_id=str(row.get("instance_id", row["id"])),
        )


def _num(x: Fraction):
    return int(x) if x.denominator == 1 else float(x)


def grade_completion(
    id: str, completion: str, gold: CanonicalDuration, complexity: int, system: str = "", instance_id: str = ""
) -> EvalRecord:
    try:
        extracted = extract_answer(completion)
    except ExtractionError:
        extracted = None
    correct = extracted is not None and extracted.seconds == gold.seconds
    return EvalRecord(id, complexity, gold, completion, extracted, correct, system, instance_id or id)


def complexity_bin(c: int, width: int = 2) -> tuple[int, int]:
    lo = (c // width) * width
    return lo, lo + width


@dataclass(frozen=True)
class GradeReport:
    n: int
    correct: int
    by_bin: Mapping[tuple[int, int], tuple[int, int]] = field(default_factory=dict)

    @property
    def accuracy(self) -> float:
        return self.correct / self.n if self.n else 0.0

    def bin_accuracy(self) -> dict[tuple[int, int], float]:
        return {b: c / n for b, (c, n) in self.by_bin.items()}

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "bins": [
                {"lo": lo, "hi": hi, "n": n, "correct": c, "accuracy": c / n}
                for (lo, hi), (c, n) in self.by_bin.items()
            ],
        }


def grade(records: Iterable[EvalRecord], width: int = 2, exclude_invalid: bool = False) -> GradeReport:
    """Overall accuracy and accuracy per complexity bin ``[w*k, w*k + w)``.

    Invalid (empty) completions count as wrong unless ``exclude_invalid``.
    """
    counts = defaultdict(lambda: [0, 0])
    n = correct = 0
    for r in records:
        if exclude_invalid and r.invalid:
            continue
        n += 1
        correct += r.correct
        b = counts[complexity_bin(r.complexity, width)]
        b[0] += r.correct
        b[1] += 1
    by_bin = {k: (v[0], v[1]) for k, v in sorted(counts.items())}
    return GradeReport(n, correct, by_bin)


def mcnemar_exact(a_only: int, b_only: int) -> Fraction:
    """Exact two-sided binomial p-value on the discordant pairs, as a fraction."""
    n = a_only + b_only
    if n == 0:
        return Fraction(1)
    tail = sum(math.comb(n, i) for i in range(min(a_only, b_only) + 1))
    return min(Fraction(1), Fraction(2 * tail, 2**n))


def mcnemar(a_only: int, b_only: int, exact_limit: int = 25) -> float:
    """McNemar's test from the two discordant counts.

    Exact binomial test when ``a_only + b_only <= exact_limit``, otherwise the
    chi-square statistic with continuity correction ``(|b - c| - 1)^2 / (b + c)``
    (floored at zero) on one degree of freedom.
    """
    for v in (a_only, b_only):
        if isinstance(v, bool) or int(v) != v or v < 0:
            raise ValidationError(f"discordant counts must be non-negative integers, got {v!r}")
    a_only, b_only = int(a_only), int(b_only)
    n = a_only + b_only
    if n <= exact_limit:
        return float(mcnemar_exact(a_only, b_only))
    stat = max(0, abs(a_only - b_only) - 1) ** 2 / n
    return min(1.0, max(0.0, math.erfc(math.sqrt(stat / 2))))


@dataclass(frozen=True)
class HolmResult:
    reject: tuple[bool, ...]
    adjusted: tuple[float, ...]


def holm_bonferroni(p_values: Sequence[float], alpha: float = 0.05) -> HolmResult:
    """Holm's step-down correction, results in input order.

    Sorted ascending, ``p_(i)`` is rejected while ``p_(i) <= alpha / (m - i + 1)``;
    the first failure stops the procedure. Adjusted values are
    ``max_{j <= i} min(1, (m - j + 1) p_(j))``.
    """
    if not 0 < alpha < 1:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    ps = [float(p) for p in p_values]
    for p in ps:
        if not 0 <= p <= 1:
            raise ValidationError(f"p-value out of range: {p}")
    m = len(ps)
    order = sorted(range(m), key=lambda i: ps[i])
    reject = [False] * m
    adjusted = [0.0] * m
    running = 0.0
    stopped = False
    for rank, i in enumerate(order):
        factor = m - rank
        running = max(running, min(1.0, factor * ps[i]))
        adjusted[i] = running
        if not stopped and ps[i] <= alpha / factor:
            reject[i] = True
        else:
            stopped = True
    return HolmResult(tuple(reject), tuple(adjusted))


def _edge_set(edges) -> set[tuple[int, int]]:
    return {(e.before, e.after) if isinstance(e, Constraint) else (int(e[0]), int(e[1])) for e in edges}


def edge_prf(gold, pred, conventional: bool = False) -> tuple[float, float, float]:
    """Pairwise edge precision, recall and F1.

    The default follows the dependency-annotation convention where precision
    divides the overlap by the *gold* edge count and recall by the *predicted*
    count. ``conventional=True`` swaps the denominators. A zero denominator
    yields 0 and a warning.
    """
    g, p = _edge_set(gold), _edge_set(pred)
    overlap = len(g & p)
    den_p, den_r = (len(p), len(g)) if conventional else (len(g), len(p))

    def ratio(num, den, name):
        if den == 0:
            warnings.warn(f"{name} undefined for an empty edge set; using 0", RuntimeWarning, stacklevel=3)
            return 0.0
        return num / den

    precision = ratio(overlap, den_p, "precision")
    recall = ratio(overlap, den_r, "recall")
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def unit_distance_report(
    items: Iterable[tuple[int, Sequence[Duration]]], width: int = 2
) -> dict[tuple[int, int], float]:
    """Mean time-unit distance per complexity bin over ``(complexity, durations)`` pairs."""
    acc = defaultdict(list)
    for c, durations in items:
        acc[complexity_bin(c, width)].append(unit_distance(durations))
    return {b: sum(v) / len(v) for b, v in sorted(acc.items())}


@dataclass(frozen=True)
class PairedOutcome:
    both_correct: int
    a_only: int
    b_only: int
    both_wrong: int

    @property
    def n(self) -> int:
        return self.both_correct + self.a_only + self.b_only + self.both_wrong

    @classmethod
    def from_records(cls, a: Iterable[EvalRecord], b: Iterable[EvalRecord]) -> "PairedOutcome":
        """Pair two systems' records by instance id; both must cover the same ids."""
        ra = {r.instance_id or r.id: r.correct for r in a}
        rb = {r.instance_id or r.id: r.correct for r in b}
        if set(ra) != set(rb):
            raise ValidationError("paired systems must be graded on identical instances")
        both_c = sum(1 for k in ra if ra[k] and rb[k])
        a_only = sum(1 for k in ra if ra[k] and not rb[k])
        b_only = sum(1 for k in ra if rb[k] and not ra[k])
        return cls(both_c, a_only, b_only, len(ra) - both_c - a_only - b_only)

    def p_value(self) -> float:
        return mcnemar(self.a_only, self.b_only)


def exclude_invalid_ids(records_by_system: Mapping[str, Iterable[EvalRecord]]) -> set[str]:
    """Instance ids that are invalid in *any* system (to be dropped from all)."""
    bad = set()
    for recs in records_by_system.values():
        bad |= {r.instance_id or r.id for r in recs if r.invalid}
    return bad


def compare_systems(
    records_by_system: Mapping[str, Sequence[EvalRecord]],
    pairs: Sequence[tuple[str, str]] | None = None,
    alpha: float = 0.05,
    exclude_invalid: bool = False,
    width: int = 2,
) -> dict:
    """Accuracy per system plus McNemar/Holm comparisons.

    By default every PLaG system is compared against the most accurate
    non-PLaG system; when there are no PLaG systems, all pairs are compared.
    """
    systems = {k: list(v) for k, v in records_by_system.items()}
    if exclude_invalid:
        bad = exclude_invalid_ids(systems)
        systems = {k: [r for r in v if (r.instance_id or r.id) not in bad] for k, v in systems.items()}
    reports = {k: grade(v, width) for k, v in systems.items()}
    if pairs is None:
        plag = [k for k in systems if k.startswith("plag")]
        rest = [k for k in systems if not k.startswith("plag")]
        if plag and rest:
            base = max(rest, key=lambda k: (reports[k].accuracy, k))
            pairs = [(k, base) for k in plag]
        else:
            names = list(systems)
            pairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1:]]
    outcomes = [PairedOutcome.from_records(systems[a], systems[b]) for a, b in pairs]
    pvals = [o.p_value() for o in outcomes]
    holm = holm_bonferroni(pvals, alpha) if pvals else HolmResult((), ())
    comparisons = []
    for (a, b), o, p, rej, adj in zip(pairs, outcomes, pvals, holm.reject, holm.adjusted):
        comparisons.append(
            {
                "a": a,
                "b": b,
                "both_correct": o.both_correct,
                "a_only": o.a_only,
                "b_only": o.b_only,
                "both_wrong": o.both_wrong,
                "p_value": p,
                "p_adjusted": adj,
                "reject": rej,
                "a_better": rej and reports[a].accuracy > reports[b].accuracy,
            }
        )
    return {
        "alpha": alpha,
        "exclude_invalid": exclude_invalid,
        "systems": {k: r.to_json() for k, r in reports.items()},
        "comparisons": comparisons,
    }


def format_table(report: Mapping) -> str:
    """Plain-text accuracy row per system; a dagger marks significant wins."""
    marks = {c["a"] for c in report["comparisons"] if c["a_better"]}
    names = list(report["systems"])
    cells = [f"{report['systems'][k]['accuracy']:.3f}" + ("†" if k in marks else "") for k in names]
    widths = [max(len(n), len(c)) for n, c in zip(names, cells)]
    head = " | ".join(n.ljust(w) for n, w in zip(names, widths))
    row = " | ".join(c.ljust(w) for c, w in zip(cells, widths))
    lines = ["system   | " + head, "accuracy | " + row]
    for c in report["comparisons"]:
        lines.append(
            f"{c['a']} vs {c['b']}: a_only={c['a_only']} b_only={c['b_only']} "
            f"p={c['p_value']:.6f} holm={c['p_adjusted']:.6f}"
            + (" *" if c["reject"] else "")
        )
    return "\n".join(lines)


def gold_text(gold: CanonicalDuration) -> str:
    return format_duration(gold)
