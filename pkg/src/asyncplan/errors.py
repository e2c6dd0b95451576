"""Exception hierarchy shared by all modules.

Everything raised on bad *input* derives from :class:`ValidationError` (also a
``ValueError``) so callers can catch one type; the CLI maps it to exit code 2.
"""

from __future__ import annotations


class AsyncPlanError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(AsyncPlanError, ValueError):
    """Input failed validation or parsing."""


class CycleError(ValidationError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        path = " -> ".join(str(n) for n in self.cycle)
        super().__init__(f"ordering constraints contain a cycle: {path}")


class PlanReferenceError(ValidationError):
    """A constraint names a step index that does not exist."""


class DurationParseError(ValidationError):
    def __init__(self, message, text="", span=None):
        self.text = text
        self.span = span
        if span is not None:
            message = f"{message} at {span[0]}:{span[1]} in {text!r}"
        super().__init__(message)


class DurationRangeError(DurationParseError):
    """Negative or non-finite duration value."""


class DotParseError(ValidationError):
    def __init__(self, message, line_no):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class TaskBlockParseError(ValidationError):
    pass


class ExtractionError(ValidationError):
    """No double-quoted duration could be found in a completion."""


class SizeError(AsyncPlanError):
    """Instance exceeds the configured bound of an exhaustive solver."""


class GenerationError(AsyncPlanError):
    pass


class AssemblyError(AsyncPlanError):
    pass


class JoinError(ValidationError):
    """Prompt and completion files disagree on their ids."""

    def __init__(self, missing, unknown=()):
        self.missing = sorted(missing)
        self.unknown = sorted(unknown)
        parts = []
        for label, ids in (("no completion for prompt ids", self.missing), ("completions match no prompt", self.unknown)):
            if ids:
                more = "" if len(ids) <= 10 else f" (+{len(ids) - 10} more)"
                parts.append(f"{label}: {', '.join(ids[:10])}{more}")
        super().__init__("; ".join(parts))
