from typing import Any, Dict, Optional


class HingePenaltyError(Exception):
    """Base class for every structured error raised by the package."""
    code = 'hinge_penalty_error'

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message = message
        self.context: Dict[str, Any] = context

    def to_dict(self) -> Dict[str, Any]:
        return {'code': self.code, 'message': self.message, 'context': {k: repr(v) for k, v in self.context.items()}}

    def __repr__(self) -> str:
        return f"{type(self).__name__}(code='{self.code}', message='{self.message}')"


class InvalidArgumentError(HingePenaltyError):
    code = 'invalid_argument'


class DimensionMismatchError(InvalidArgumentError):
    code = 'dimension_mismatch'


class BatchProvenanceError(HingePenaltyError):
    code = 'batch_provenance'


class StreamReuseError(HingePenaltyError):
    code = 'stream_reuse'


class MissingExactEvaluatorError(HingePenaltyError):
    code = 'missing_exact_evaluator'


class InstanceGenerationError(HingePenaltyError):
    code = 'instance_generation'


class DataError(HingePenaltyError):
    code = 'data'


class MonotonicityError(HingePenaltyError):
    code = 'monotonicity'


class ScheduleError(HingePenaltyError):
    code = 'schedule'


class SerializationError(HingePenaltyError):
    code = 'serialization'


class ConfigError(HingePenaltyError):
    code = 'config'

    def __init__(self, message: str, line: Optional[int] = None, **context: Any):
        super().__init__(message, **context)
        self.line = line

    def __str__(self) -> str:
        if self.line is not None:
            return f"line {self.line}: {self.message}"
        return self.message


class MalformedCsvError(HingePenaltyError):
    code = 'malformed_csv'
