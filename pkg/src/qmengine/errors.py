"""Exception types raised across the library."""


class EngineError(Exception):
    """Base class for all library errors."""


class DimMismatch(EngineError):
    """Operands have incompatible dimensions."""


class NotHermitian(EngineError):
    """Matrix deviates from its conjugate transpose beyond tolerance."""


class NotPSD(EngineError):
    """Matrix has an eigenvalue below the negative tolerance."""


class TraceMismatch(EngineError):
    """Trace differs from the required value beyond tolerance."""


class KrausViolation(EngineError):
    """Kraus operators do not resolve the identity."""

    def __init__(self, residual: float, message: str | None = None):
        self.residual = residual
        super().__init__(message or f"Kraus condition violated, residual {residual:.3e}")


class NotUnitary(EngineError):
    """Matrix is not unitary within tolerance."""


class LengthMismatch(EngineError):
    """Paired operator lists have different lengths."""


class ParamOutOfRange(EngineError):
    """Scalar parameter outside its admissible range."""


class DegenerateSample(EngineError):
    """Random sampling produced a numerically singular normalizer."""


class EigSolverFailure(EngineError):
    """Eigendecomposition failed or did not reconstruct the input."""


class IllConditioned(EngineError):
    """Spectral projector construction is too ill-conditioned to trust."""

    def __init__(self, condition: float, message: str | None = None):
        self.condition = condition
        super().__init__(message or f"projector condition estimate {condition:.3e} exceeds bound")


class NoRecurrenceFound(EngineError):
    """No return below epsilon within the scanned horizon."""

    def __init__(self, min_distance: float, at_time: int, message: str | None = None):
        self.min_distance = min_distance
        self.at_time = at_time
        super().__init__(
            message
            or f"no recurrence found; closest approach {min_distance:.3e} at n={at_time}"
        )


class ValidationFailure(EngineError):
    """A value that should be valid by construction failed validation."""


class NonHermitianKraus(EngineError):
    """Operation requires a Hermitian Kraus set."""


class NotPureMeasurementCycle(EngineError):
    """Cycle contains a step that is not a bare measurement."""


class ConfigParse(EngineError):
    """Configuration file is malformed; carries the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")
