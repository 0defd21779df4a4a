"""Exception types shared across the package."""


class WixupError(Exception):
    """Base class for all errors raised by this package."""


class DataError(WixupError):
    """Invalid dataset content: malformed lines, broken invariants, bad shapes."""


class OutOfRangeError(WixupError):
    """A point lies at or beyond the maximum detectable range of the window."""
