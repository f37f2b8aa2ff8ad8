"""Exception hierarchy shared across the package.

Each class carries the process exit code the CLI maps it to.
"""


class WavelensError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(WavelensError):
    """Invalid or inconsistent configuration / input parameters."""

    exit_code = 2


class NumericalError(WavelensError):
    """A simulation or optimization produced an unusable numerical result."""

    exit_code = 3


class DataError(WavelensError):
    """File I/O or file-format problem."""

    exit_code = 4
