"""The ten constraint phrasings and the fixed sentences of a task block.

Each phrasing lives in ``data/templates/NN.txt`` as one line with ``{before}``
and ``{after}`` placeholders. Rendering and parsing are both derived from that
single line, so the two directions cannot drift apart.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

N_TEMPLATES = 10

HEADER = "To {task}, here are the steps and the times needed for each step."
STEP_LINE = "Step {index}. {text} ({duration})"
CONSTRAINTS_INTRO = "These ordering constraints need to be obeyed when executing above steps:"
QUESTION_STEM = (
    "Question: Assume that you need to execute all the steps to complete the task and that "
    "infinite resources are available. What is the shortest possible time to {task}?"
)
ASK_PLAIN = "Answer the time in double quotes."
ASK_COT = "Let's think step by step and then answer the time in double quotes."
ASK_BAG = (
    "Let's construct a graph with the nodes and edges first to represent step ordering "
    "constraints, and also construct a dictionary to represent time needed for each step. "
    "Use the graph and dictionary to calculate the shortest possible time needed for the task. "
    + ASK_COT
)
GRAPH_INTRO = "Here is the {name} representation of the step ordering constraints:"
TIME_INTRO = "Time for each step can be represented as a dictionary:"
ANSWER = "Answer:"

_NUM_LIST = r"\d+(?:(?:, | and )\d+)*"


def join_followers(indices) -> str:
    """``[2]`` -> ``"2"``, ``[2, 3]`` -> ``"2 and 3"``, ``[2, 3, 4]`` -> ``"2, 3 and 4"``."""
    items = [str(i) for i in indices]
    if len(items) == 1:
        return items[0]
    return ", ".join(items[:-1]) + " and " + items[-1]


def split_followers(text: str) -> list[int]:
    return [int(x) for x in re.split(r", | and ", text)]


@dataclass(frozen=True)
class ConstraintTemplate:
    id: int
    pattern: str

    def render(self, before: int, after) -> str:
        if not isinstance(after, (list, tuple)):
            after = [after]
        return self.pattern.format(before=before, after=join_followers(after))

    @property
    def regex(self) -> re.Pattern:
        return _compile(self.pattern)


@lru_cache(maxsize=None)
def _compile(pattern: str) -> re.Pattern:
    parts = re.split(r"(\{before\}|\{after\})", pattern)
    out = []
    for p in parts:
        if p == "{before}":
            out.append(r"(?P<before>\d+)")
        elif p == "{after}":
            out.append(rf"(?P<after>{_NUM_LIST})")
        else:
            out.append(re.escape(p))
    return re.compile("".join(out))


@lru_cache(maxsize=None)
def load_templates() -> tuple[ConstraintTemplate, ...]:
    root = resources.files("asyncplan") / "data" / "templates"
    out = []
    for i in range(1, N_TEMPLATES + 1):
        line = (root / f"{i:02d}.txt").read_text(encoding="utf-8").strip()
        out.append(ConstraintTemplate(i, line))
    return tuple(out)


def get_template(template_id: int) -> ConstraintTemplate:
    if isinstance(template_id, bool) or not isinstance(template_id, int) or not 1 <= template_id <= N_TEMPLATES:
        raise ValueError(f"template id must be in 1..{N_TEMPLATES}, got {template_id!r}")
    return load_templates()[template_id - 1]


def match_sentence(sentence: str):
    """Return ``(template_id, before, [after...])`` for a known phrasing, else None."""
    for t in load_templates():
        m = t.regex.fullmatch(sentence)
        if m:
            return t.id, int(m["before"]), split_followers(m["after"])
    return None
