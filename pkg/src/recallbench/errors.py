"""Exception types shared across the package."""


class RecallBenchError(Exception):
    """Base class for package errors."""


class LockUnavailable(RecallBenchError):
    """Could not acquire the event-log append lock; safe to retry."""


class TornLogError(RecallBenchError):
    """The event log ends in (or contains) an unparseable record."""

    def __init__(self, path: str, line_number: int, detail: str = ""):
        self.path = path
        self.line_number = line_number
        super().__init__(f"{path}:{line_number}: malformed event record{': ' + detail if detail else ''}")


class MissingVectorError(KeyError):
    """A precomputed-vector provider was asked for a text it does not hold."""

    def __init__(self, text: str):
        self.text = text
        super().__init__(f"no stored vector for text: {text!r}")


class PermissionDenied(RecallBenchError):
    """Actor unknown to the grant table while ACL enforcement is on."""


class LifecycleViolation(RecallBenchError):
    """Illegal lifecycle event under STRICT reduction."""
