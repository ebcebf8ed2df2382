"""Exception types shared across the package.

Validation failures raise ValueError (or this module's ScanError subclass);
work that would exceed a hard budget raises ResourceLimitError.  The CLI maps
the former to exit code 2 and the latter to exit code 3.
"""


class ResourceLimitError(RuntimeError):
    """Requested computation exceeds a memory or enumeration budget."""


class ScanError(ValueError):
    """A critical-rate scan could not bracket the target.

    Carries the probed grid so the caller can see where the search got stuck.
    """

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = tuple(trace)
