"""Exception types raised by densemimo."""

import numpy as np


class ModelInconsistencyError(ValueError):
    """A constructed array quantity violates a physical invariant (e.g. passivity)."""


class UnsupportedPatternError(ValueError):
    pass


class SingularNetworkError(np.linalg.LinAlgError):
    pass


class NonPassiveImpedanceError(ValueError):
    pass


class RankDeficiencyError(np.linalg.LinAlgError):
    """A Gram matrix needed for zero-forcing is singular."""


class DegenerateCovarianceError(np.linalg.LinAlgError):
    pass


class InvalidCovarianceError(ValueError):
    pass


class NoNullSpaceError(ZeroDivisionError):
    pass


class DegenerateRadiationError(ZeroDivisionError):
    pass


class ConfigError(ValueError):
    pass


class NumericalFailure(RuntimeError):
    """Too many channel realizations failed and had to be resampled."""
