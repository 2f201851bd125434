"""Exception hierarchy.

Every failure the library reports on bad input derives from
:class:`TemplarError`, so callers (and the CLI) can separate domain errors
from programming errors with a single ``except``.
"""


class TemplarError(Exception):
    """Base class for all domain errors."""


class ConfigError(TemplarError, ValueError):
    pass


class DomainError(TemplarError, ValueError):
    pass


# audio


class WavFormatError(TemplarError):
    pass


class UnsupportedChannelsError(TemplarError):
    pass


class UnsupportedEncodingError(TemplarError):
    pass


class UnsupportedSampleRateError(TemplarError):
    pass


class SilenceError(TemplarError):
    pass


# features / matching


class TooShortError(TemplarError):
    pass


class ShapeError(TemplarError, ValueError):
    pass


class EmptyInputError(TemplarError, ValueError):
    pass


class InfeasibleBandError(TemplarError):
    pass


class IncompatibleFeaturesError(TemplarError):
    pass


# template store


class DuplicateTemplateError(TemplarError):
    pass


class EmptyStoreError(TemplarError):
    pass


class StoreFormatError(TemplarError):
    pass


class StoreVersionError(TemplarError):
    pass


class StoreCorruptionError(TemplarError):
    pass


# evaluation


class ProtocolError(TemplarError):
    pass
