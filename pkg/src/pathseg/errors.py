"""Exception hierarchy shared across the package.

InputError maps to CLI exit code 2, InternalError to exit code 3.
"""


class PathsegError(Exception):
    """Base class for all package errors."""


class InputError(PathsegError):
    """Invalid user input: bad files, out-of-range values, dimension mismatches."""


class InternalError(PathsegError):
    """A violated internal invariant; indicates a bug, not bad input."""
