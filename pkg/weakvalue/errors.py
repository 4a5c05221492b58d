from typing import Optional


class WeakValueError(Exception):
    """Generic class for weakvalue error handling"""

    def __init__(self, message: str) -> None:
        self.message = message
        super().__init__(self.message)

    def __str__(self) -> str:
        return f'{type(self).__name__}. Error message: {self.message}'

class InvalidArgumentError(WeakValueError, ValueError):
    """Argument outside the domain of an operation"""

class DivergentWeakValueError(WeakValueError):
    """Pre- and post-selected states are (numerically) orthogonal"""

    def __init__(self, overlap: float, tolerance: float) -> None:
        self.overlap = overlap
        self.tolerance = tolerance
        super().__init__(f'|<psi_f|psi_i>| = {overlap:.3e} is not above {tolerance:.1e}')

class UnsupportedImaginaryError(WeakValueError):
    """Meter model evaluated with a complex weak value"""

class VanishingPostselectionError(WeakValueError):
    """Post-selection succeeds with (numerically) zero probability"""

    def __init__(self, probability: float) -> None:
        self.probability = probability
        super().__init__(f'post-selection probability {probability:.3e} is not above 1e-12')

class InternalConsistencyError(WeakValueError):
    """Numerical result violating an invariant it must satisfy"""

class InsufficientCountsError(WeakValueError):
    """Count map too sparse for an estimate"""

class InversionError(WeakValueError):
    """Meter centroid cannot be mapped back to a weak value"""

    def __init__(self, centroid: float, message: str) -> None:
        self.centroid = centroid
        super().__init__(message)

    def __str__(self) -> str:
        return f'InversionError. Centroid: {self.centroid!r}. Error message: {self.message}'

class DegenerateRegionError(WeakValueError):
    """Validity tolerance too small to contain the eigenvalue interval"""

class ConfigError(WeakValueError):
    """Invalid experiment configuration"""

    def __init__(
        self,
        field: str,
        message: str,
        line_number: Optional[int] = None,
        line: Optional[str] = None,
    ) -> None:
        self.field = field
        self.line_number = line_number
        self.line = line
        super().__init__(message)

    def __str__(self) -> str:
        if self.line_number is not None:
            return f'ConfigError. Field: {self.field}. Line {self.line_number}: {self.line!r}. Error message: {self.message}'

        return f'ConfigError. Field: {self.field}. Error message: {self.message}'

class WeakValueExecutionError(WeakValueError):
    """Error raised when the worker pool cannot run a job"""

    def __str__(self) -> str:
        return f'WeakValueExecutionError, {self.message}'
