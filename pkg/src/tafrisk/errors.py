"""Exception hierarchy shared by all workbench modules.

``ValidationFailure`` subclasses signal bad inputs or contract violations
(CLI exit code 2); everything else under ``WorkbenchError`` is a runtime
failure (exit code 1).
"""


class WorkbenchError(Exception):
    """Base class for every error raised by this package."""


class ValidationFailure(WorkbenchError):
    """Input or contract violation; maps to CLI exit code 2."""


# cohort
class SchemaMismatch(ValidationFailure):
    pass


class BadLabel(ValidationFailure):
    pass


class EmptyCohort(ValidationFailure):
    pass


class BadSpec(ValidationFailure):
    pass


# preprocess
class AllFeaturesDropped(WorkbenchError):
    pass


class AllMissingColumn(WorkbenchError):
    pass


class DegenerateColumn(WorkbenchError):
    pass


# models
class SingleClass(WorkbenchError):
    pass


class NegativeFeature(WorkbenchError):
    pass


class FeatureMismatch(ValidationFailure):
    pass


class AllCandidatesFailed(WorkbenchError):
    pass


# evaluate
class TooFewRows(WorkbenchError):
    pass


class AllRunsFailed(WorkbenchError):
    pass


# scale
class NotLogistic(ValidationFailure):
    pass


class NonBinaryFeature(ValidationFailure):
    pass


class MissingAnswer(ValidationFailure):
    pass


# pathway
class UnlabeledPatient(ValidationFailure):
    pass


class EmptyGraph(WorkbenchError):
    pass


class NonConvergenceWarning(UserWarning):
    """Iterative fit hit its iteration cap before meeting tolerance."""
