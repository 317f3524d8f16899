"""Exception types shared across the pipeline.

The CLI maps these onto exit codes: config errors -> 1, input parse or
validation errors -> 2, render failures -> 3.
"""


class SumorenderError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(SumorenderError):
    """Malformed input document (bad XML, non-numeric attribute, ...)."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)
        self.line = line


class ValidationError(SumorenderError):
    """Structurally valid input that violates a documented contract."""


class ConfigError(SumorenderError):
    """Bad or incomplete render configuration."""


class RenderError(SumorenderError):
    """Failure while producing frames or bundles."""
