"""Exception types raised across the package."""


class QPlasticityError(Exception):
    """Base class for package errors."""


class EncodingError(QPlasticityError, ValueError):
    """Input cannot be encoded as a quantum state (zero vector, bad size)."""


class DimensionError(QPlasticityError, ValueError):
    """Array or register sizes disagree."""


class UnitarityError(QPlasticityError, ValueError):
    """A gate matrix failed the unitarity check."""


class UnsupportedGateError(QPlasticityError, ValueError):
    """The requested method does not support a gate kind in the circuit."""


class DatasetError(QPlasticityError, ValueError):
    """Malformed dataset file or invalid task construction."""


class ConfigError(QPlasticityError, ValueError):
    """Invalid experiment configuration."""
