from typing import Any, Dict, Optional


class LabError(Exception):
    """
    Base class of all errors raised by the laboratory.

    Every error carries a machine-readable code and the exit status the command line
    runner returns when the error aborts an experiment.
    """
    code = "lab-error"
    exit_code = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """
        Serializes the error for the error report of a failed run.

        Returns
        -------
        Dict[str, Any]
            {"error": code, "message": message, "details": {...}}
        """
        return {"error": self.code, "message": self.message, "details": self.details}


class ConfigError(LabError):
    code = "config"
    exit_code = 2


class GeometryError(LabError):
    code = "geometry"
    exit_code = 2


class OverlapError(GeometryError):
    code = "overlap"


class CurvatureError(GeometryError):
    code = "curvature"


class ValidationError(GeometryError):
    """
    A table violates a hypothesis that its builder enforces at construction time.
    """
    code = "validation"
    exit_code = 3

    def __init__(self, message: str, rule: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message, details)
        self.rule = rule


class DynamicsError(LabError):
    code = "dynamics"
    exit_code = 4


class CornerHitError(DynamicsError):
    """
    The ray landed within the corner tolerance of a component junction.
    The offending event is kept so callers can report where the orbit died.
    """
    code = "corner-hit"

    def __init__(self, message: str, event: Any = None):
        super().__init__(message)
        self.event = event


class NoIntersectionError(DynamicsError):
    code = "no-intersection"


class NearGrazingError(DynamicsError):
    code = "near-grazing"


class SpecCompatibilityError(LabError):
    code = "spec-compatibility"
    exit_code = 2


class MissingPrevError(LabError):
    code = "missing-prev"
    exit_code = 2


class InsufficientBudgetError(LabError):
    code = "insufficient-budget"
    exit_code = 2


class WindowTooSmallError(LabError):
    code = "window-too-small"
    exit_code = 4


class CurveSingularError(LabError):
    code = "curve-singular"
    exit_code = 4


class BudgetExceededError(LabError):
    code = "timeout"
    exit_code = 4


class ReproductionMismatch(LabError):
    code = "reproduction-mismatch"
    exit_code = 5
