from typing import Optional


class RademacherError(Exception):
    """
    Base error; carries a short code and the CLI exit code it maps to. Exit 1 is
    kept for failed verification, so rejected inputs and domain errors exit 2.
    """
    code: str = "error"
    exit_code: int = 2

    def __init__(self, message: str, code: Optional[str] = None):
        super().__init__(message)
        if code is not None:
            self.code = code

    def __str__(self) -> str:
        return f"{self.code}: {self.args[0]}"


class CapExceeded(RademacherError):
    code = "cap_exceeded"
    exit_code = 3

    def __init__(self, message: str, hint: Optional[str] = None):
        if hint:
            message = f"{message} ({hint})"
        super().__init__(message)
        self.hint = hint


class BadProbability(RademacherError):
    code = "bad_probability"


class IndexOutOfRange(RademacherError):
    code = "index_out_of_range"


class OrderExceedsDimension(RademacherError):
    code = "order_exceeds_dimension"


class NegativeTime(RademacherError):
    code = "negative_time"


class SpaceMismatch(RademacherError):
    code = "space_mismatch"


class NotStandardized(RademacherError):
    code = "not_standardized"


class NotPureChaos(RademacherError):
    code = "not_pure_chaos"


class ZeroVariance(RademacherError):
    code = "zero_variance"


class DimensionMismatch(RademacherError):
    code = "dimension_mismatch"


class RegimeUnspecified(RademacherError):
    code = "regime_unspecified"


class BadEpsilon(RademacherError):
    code = "bad_epsilon"


class EmptyBatch(RademacherError):
    code = "empty_batch"


class TooFewPoints(RademacherError):
    code = "too_few_points"


class NonpositiveDk(RademacherError):
    code = "nonpositive_dk"


class BadBatchFile(RademacherError):
    code = "bad_batch_file"


class ConfigError(RademacherError):
    code = "config_error"

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
