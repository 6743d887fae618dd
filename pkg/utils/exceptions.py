"""Custom exception classes for the Ising laboratory"""

from typing import Optional


class IsingLabError(Exception):
    """Base exception class for all laboratory errors"""
    pass


class ConfigurationError(IsingLabError):
    """Raised when there's an error with configuration"""
    pass


class ValidationError(IsingLabError):
    """Raised when input validation fails"""
    pass


class GrassmannError(IsingLabError):
    """Raised when a Grassmann algebra operation receives invalid input"""
    pass


class GeneratorMismatchError(GrassmannError):
    """Raised when two polynomials live on different generator sets"""
    pass


class PfaffianError(GrassmannError):
    """Raised when a matrix is not even-dimensional or not antisymmetric"""
    pass


class EnumerationLimitError(IsingLabError):
    """Raised when an exhaustive enumeration would exceed its configured cap"""
    pass


class RepeatedBondError(ValidationError):
    """Raised when an energy correlation is requested on repeated bonds"""
    pass


class SingularModeError(IsingLabError):
    """Raised when a momentum-space form is singular (massless (+,+) mode)"""

    def __init__(self, message: str, alpha: Optional[tuple] = None,
                 condition_number: Optional[float] = None):
        super().__init__(message)
        self.alpha = alpha
        self.condition_number = condition_number


class PolymerEnumerationError(IsingLabError):
    """Raised when polymer or string enumeration exceeds its caps"""
    pass


class LocalizationError(IsingLabError):
    """Raised when a kernel violates the symmetries required by localization"""
    pass


class FlowExitError(IsingLabError):
    """Raised when a running-coupling flow leaves its analyticity box"""

    def __init__(self, message: str, scale: Optional[int] = None):
        super().__init__(message)
        self.scale = scale


class ContractionError(IsingLabError):
    """Raised when a fixed-point map is not a contraction"""

    def __init__(self, message: str, factor: Optional[float] = None):
        super().__init__(message)
        self.factor = factor


class ConvergenceStudyError(IsingLabError):
    """Raised when a convergence study is ill-posed"""
    pass


class GeometryError(ValidationError):
    """Raised when points are coincident or not representable on a grid"""
    pass
