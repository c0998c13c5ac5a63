"""Exception types shared across the package."""


class InputError(Exception):
    """Bad input data: unreadable files, malformed specs, unsupported formats."""


class UsageError(Exception):
    """Bad command-line invocation."""
