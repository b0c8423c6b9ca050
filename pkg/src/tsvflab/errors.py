"""Exception types shared across the laboratory modules."""


class NonHermitianOperatorError(ValueError):
    """An operation required a hermitian operator and got something else."""


class OrthogonalSelectionError(ValueError):
    """Pre- and post-selection overlap is below the analytic weak-value threshold."""


class DarkDetectorError(RuntimeError):
    """The post-selected branch carries no amplitude (genuinely dark detector)."""


class UnclassifiedOrderError(RuntimeError):
    """A fitted leading order fell outside every classification band."""


class ScheduleError(ValueError):
    """A coupling or spread schedule violates its monotonicity/positivity contract."""
