"""Shared exception types. The CLI maps each to a distinct exit code."""


class CrprobeError(Exception):
    """Base class for all crprobe failures."""


class ConfigError(CrprobeError):
    """Invalid configuration: unknown keys, bad values, missing columns."""


class DataError(CrprobeError):
    """Input data cannot be processed: empty corpus, missing caches, bad files."""


class ModelError(CrprobeError):
    """Model training or scoring failed (e.g. divergence)."""
