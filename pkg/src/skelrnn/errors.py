"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration problems exit 1, data
problems exit 2 and numerical failures exit 3.
"""


class SkelRNNError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InvalidInputError(SkelRNNError, ValueError):
    """An argument violates a documented precondition."""


class ConfigError(SkelRNNError):
    """A configuration value or network spec is inconsistent."""


class LoadError(SkelRNNError):
    """A dataset file could not be parsed or violates an invariant."""

    exit_code = 2


class SerializationError(SkelRNNError):
    """A skeleton graph cannot be turned into the requested joint order."""

    exit_code = 2


class TrainingError(SkelRNNError):
    """Training hit a non-finite loss or gradient."""

    exit_code = 3
