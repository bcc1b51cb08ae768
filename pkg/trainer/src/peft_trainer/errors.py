"""Trainer and server error types."""


class TrainerError(Exception):
    """Base class for trainer errors."""


class DataError(TrainerError):
    """Instruction dataset is missing or malformed."""


class ConfigError(TrainerError):
    """Adapter configuration is outside the supported recipe."""


class ResourceError(TrainerError):
    """The requested training run cannot be satisfied (budget, base model)."""


class PortInUse(TrainerError):
    """The serving port is already taken."""


class LoadError(TrainerError):
    """Adapter artifact is incomplete or corrupt."""
