"""
Error types of TwoStageLab.

Every error carries the operation that raised it, the offending field when there is one and an
integer `code` that the command line uses as its exit status. Messages use the tagged form
`[TwoStageLab.<operation>.<ErrorName>]: <explanation>`.
"""


class TwoStageError(Exception):
    code = 1

    def __init__(self, operation, message, field=None):
        self.operation = operation
        self.field = field
        self.explanation = message
        super().__init__(f"[TwoStageLab.{operation}.{type(self).__name__}]: {message}")


class ParameterError(TwoStageError):
    """A rate or lattice parameter is outside its domain; `field` names it."""
    code = 2


class ConfigError(TwoStageError):
    """An experiment configuration cannot be parsed or validated; `field` is the key path."""
    code = 3


class OverlapError(TwoStageError):
    """An initial pair (C, D) has C and D intersecting."""
    code = 4


class SizeError(TwoStageError):
    """A brute-force state space exceeds its budget."""
    code = 5


class StepError(TwoStageError):
    """Adaptive integration failed to converge."""
    code = 6


class DomainError(TwoStageError):
    """A constructed vector left the positive cone (e.g. min K <= 0)."""
    code = 7


class DimensionTooSmall(TwoStageError):
    """A bound is vacuous in this dimension: its denominator is not positive."""
    code = 8


class BudgetExceeded(TwoStageError):
    """A sweep would run more replicas than its budget allows."""
    code = 9


class ExtinctionDuringSampling(TwoStageError):
    """The finite torus died out while sampling the quasi-stationary state."""
    code = 10


class GateFailure(TwoStageError):
    """A stationarity, stability or agreement gate of an experiment failed."""
    code = 11


class RecurrenceWarning(UserWarning):
    """Hitting probabilities of a recurrent walk are 1; truncated estimates are misleading."""
