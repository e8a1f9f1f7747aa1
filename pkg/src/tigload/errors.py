"""Exception hierarchy shared across the package.

Every error raised by tigload derives from :class:`TigloadError` so callers
can catch the whole family at once. Validation findings are *not* errors;
they are returned as data (see ``tigload.model.Violation``).
"""


class TigloadError(Exception):
    """Base class for all tigload errors."""


class CycleError(TigloadError):
    """The dependency graph contains a cycle and cannot be linearized."""


class UnknownEdge(TigloadError):
    """An edge was queried that does not belong to the graph."""


class InvalidTask(TigloadError):
    """A task instance failed validation; carries the violation list."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class DomainError(TigloadError):
    """A numeric argument is outside its documented domain."""


class ScorerUnavailable(TigloadError):
    """The remote scorer could not be reached after exhausting retries."""


class MalformedScore(TigloadError):
    """The remote scorer replied, but not with the required two-number block."""


class TooFewTasks(TigloadError):
    """Tercile bucketing needs at least three tasks."""


class EmptyBucket(TigloadError):
    """A load bucket contains no trials, so bucket accuracy is undefined."""


class DegenerateCalibration(TigloadError):
    """Intrinsic-load accuracy drop is non-positive; the extraneous scale
    factor is undefined and must be supplied manually."""


class InsufficientData(TigloadError):
    """Too few populated bins (or trials) to fit a profile."""


class DegenerateLoads(TigloadError):
    """All task loads are identical; a decay curve cannot be fitted."""


class DegenerateGroup(TigloadError):
    """A calibration-test group has mean predicted probability 0 or 1."""


class TargetUnreachable(TigloadError):
    """The requested load target cannot be met by the generator.

    ``achievable`` carries the computed bound that was violated.
    """

    def __init__(self, message, achievable=None):
        super().__init__(message)
        self.achievable = achievable


class UnmatchedTrial(TigloadError):
    """Trials reference task ids with no computed load."""

    def __init__(self, message, task_ids=None):
        super().__init__(message)
        self.task_ids = sorted(task_ids or [])


class NoProfiles(TigloadError):
    """Routing was asked to pick an agent but no profiles were supplied."""


class ConfigError(TigloadError):
    """A run configuration file or flag combination is invalid."""


class DataError(TigloadError):
    """An input data file is malformed; carries line-precise diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])
