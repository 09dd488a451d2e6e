"""Exception taxonomy. Each class maps onto one CLI exit code so that library
errors surface with a stable contract: format/IO problems exit 1, validation
problems exit 2, numeric failures exit 3."""


class ToonFuseError(Exception):
    """Base class for all package errors."""


class ValidationError(ToonFuseError):
    """An input value is outside its documented domain. Exit code 2."""


class DimensionError(ValidationError):
    """Array shapes are inconsistent with each other or with a config. Exit code 2."""


class NumericError(ToonFuseError):
    """A computation produced non-finite values or lost its scale. Exit code 3."""


class FormatError(ToonFuseError):
    """A binary file does not match its on-disk format. Exit code 1."""


class LatentFormatError(FormatError):
    """Bad magic, version, or layout in a .lat latent file."""


class CheckpointFormatError(FormatError):
    """Bad magic, version, or layout in a .tagn checkpoint file."""
