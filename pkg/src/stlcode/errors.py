"""Exception hierarchy shared by every stlcode module."""

from __future__ import annotations

from contextlib import contextmanager


class StlcodeError(Exception):
    """Base class for all errors raised by stlcode."""

    stage: str | None = None


class InputError(StlcodeError, ValueError):
    """Malformed arguments: bad shapes, out-of-range parameters, empty data."""


class DomainError(InputError):
    """An observation lies outside its exponential family's data domain."""


class ParseError(InputError):
    """A dataset or config file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ModelFormatError(InputError):
    """A model file is corrupt, truncated, or otherwise unreadable."""


class FormatVersionError(ModelFormatError):
    """A model file declares a format_version this build does not understand."""


class DivergenceError(StlcodeError, ArithmeticError):
    """A numerical routine produced non-finite intermediates."""


@contextmanager
def stage(name: str):
    """Tag any StlcodeError raised inside the block with a pipeline stage name."""
    try:
        yield
    except StlcodeError as err:
        if err.stage is None:
            err.stage = name
            err.args = (f"[{name}] {err.args[0] if err.args else ''}",) + err.args[1:]
        raise
