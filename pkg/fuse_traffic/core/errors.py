class FuseTrafficError(Exception):
    """Базовая ошибка пакета. `code`: стабильный идентификатор для CLI."""

    code = "error"


class ShapeError(FuseTrafficError):
    code = "shape"


class ConfigurationError(FuseTrafficError):
    code = "config"


class DataValidationError(FuseTrafficError):
    code = "validation"


class GradientCheckError(FuseTrafficError):
    code = "gradcheck"


class TemplateError(FuseTrafficError):
    code = "template"


class ResponseParseError(FuseTrafficError):
    code = "parse"


class RetrievalError(FuseTrafficError):
    code = "retrieval"


class DivergenceError(FuseTrafficError):
    code = "divergence"


class MetricError(FuseTrafficError):
    code = "metric"


class CheckpointError(FuseTrafficError):
    code = "checkpoint"


class ChecksumError(CheckpointError):
    code = "checksum"


class CheckpointVersionError(CheckpointError):
    code = "checkpoint_version"


class AcceptanceError(FuseTrafficError):
    code = "acceptance"
