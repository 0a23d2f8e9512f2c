"""Harness error hierarchy."""


class HarnessError(Exception):
    """Base class for harness failures."""


class ConfigError(HarnessError, ValueError):
    """An experiment configuration is invalid or inconsistent with its
    inputs (e.g. model patch size vs. dataset patch size)."""


class DataError(HarnessError, ValueError):
    """A dataset tree or manifest is malformed or fails integrity checks."""
