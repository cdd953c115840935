"""Exception types shared across the package."""


class ZeroShotSTError(Exception):
    """Base class for all package errors."""


class DimensionError(ZeroShotSTError, ValueError):
    """Operand shapes are incompatible."""


class ContractError(ZeroShotSTError, ValueError):
    """A call violated a documented precondition."""


class NonFiniteError(ZeroShotSTError, FloatingPointError):
    """An operation produced NaN or Inf."""


class ArgumentError(ZeroShotSTError, ValueError):
    """An argument value is out of its allowed domain."""


class TokenIndexError(ZeroShotSTError, IndexError):
    """A token id lies outside the vocabulary."""


class RenderError(ZeroShotSTError, ValueError):
    """Text cannot be rendered to pseudo-audio."""


class FormatError(ZeroShotSTError, ValueError):
    """A binary file does not carry the expected magic bytes."""


class VersionError(ZeroShotSTError, ValueError):
    """A binary file was written with an unsupported format version."""


class IntegrityError(ZeroShotSTError, ValueError):
    """A binary file is truncated or its manifest disagrees with its payload."""


class IllConditionedError(ZeroShotSTError, ValueError):
    """Too few samples for a stable covariance estimate."""


class TrainingError(ZeroShotSTError, RuntimeError):
    """Training diverged."""


class CascadeError(ZeroShotSTError, RuntimeError):
    """One stage of a cascaded pipeline failed."""

    def __init__(self, stage, cause):
        super().__init__(f"cascade stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
