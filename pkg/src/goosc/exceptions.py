"""Exception hierarchy for the goosc package.

The CLI maps these onto exit codes: configuration problems exit 2,
numerical failures exit 3, experiment assertion failures exit 1.
"""

from __future__ import annotations


class GooscError(Exception):
    """Base class for all goosc errors."""


class InvalidParameterError(GooscError):
    """A model parameter violates its declared range or structure."""


class InstabilityError(GooscError):
    """The transition matrix is not stable (spectral radius >= 1)."""


class ConditioningError(GooscError):
    """A linear-algebra step broke down numerically (e.g. an innovation
    covariance lost positive definiteness)."""


class ModalDegeneracyError(GooscError):
    """The transition matrix has real or repeated eigenvalues, so no
    unique oscillatory block form exists."""


class NearCollisionError(GooscError):
    """Two mode frequencies are closer than the configured separation."""


class GaugeDegeneracyError(GooscError):
    """The observation loading of a mode vanishes in the row used to fix
    the intra-block orientation, so the gauge cannot be fixed."""


class InitializationError(GooscError):
    """The spectral initializer could not find enough separated peaks."""


class EstimationError(GooscError):
    """All optimizer restarts failed.  Carries the best attempt so the
    caller can inspect what went wrong."""

    def __init__(self, message: str, best_attempt=None):
        super().__init__(message)
        self.best_attempt = best_attempt


class CalibrationError(GooscError):
    """Not enough healthy windows to calibrate a baseline."""


class DegenerateBaselineError(GooscError):
    """The healthy losses have zero variance; standardization is undefined."""


class EvaluationError(GooscError):
    """A detection metric was requested on degenerate input (e.g. AUROC
    with a single class)."""


class ConfigError(GooscError):
    """The CLI configuration is malformed or references unknown names."""


class ExperimentFailure(GooscError):
    """An experiment ran to completion but a numerical assertion failed.
    Carries the measured values for reporting."""

    def __init__(self, message: str, assertions=None):
        super().__init__(message)
        self.assertions = assertions or []
