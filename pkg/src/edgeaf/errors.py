"""Exception hierarchy shared by every pipeline stage."""


class EdgeAFError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(EdgeAFError, ValueError):
    """Input violates a documented invariant."""


class ConfigError(ValidationError):
    """Configuration value out of its admissible range."""


class CsvParseError(EdgeAFError):
    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class UnsupportedRateError(ConfigError):
    """Requested resampling direction is not supported (upsampling)."""


class DetectorError(EdgeAFError):
    """R-peak detector cannot run on the given window."""


class InsufficientPeaksError(EdgeAFError):
    """Fewer than two R-peaks, so no interval can be formed."""


class InsufficientDataError(EdgeAFError):
    """Too few NN intervals to compute successive differences."""


class InsufficientClassDataError(EdgeAFError):
    """A class has fewer samples than the statistic requires."""


class TrainingError(EdgeAFError):
    """Training cannot start on the supplied data."""


class DivergenceError(TrainingError):
    def __init__(self, epoch, loss):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}")


class DeserializationError(EdgeAFError):
    def __init__(self, offset, message):
        self.offset = offset
        super().__init__(f"offset {offset}: {message}")


class StageError(EdgeAFError):
    """A pipeline stage failed for a specific record."""

    def __init__(self, stage, record_id, cause):
        self.stage = stage
        self.record_id = record_id
        self.cause = cause
        super().__init__(f"stage {stage!r} failed on record {record_id!r}: {cause}")
