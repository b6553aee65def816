"""Exception types shared across the package.

The CLI maps :class:`DataError` to exit code 2 and :class:`NumericError`
to exit code 3.
"""


class FusedFaceError(Exception):
    pass


class DataError(FusedFaceError, ValueError):
    """Bad input data: wrong shapes, malformed files, unsatisfiable protocol."""


class NumericError(FusedFaceError, ArithmeticError):
    """A computation produced NaN/inf or hit a degenerate numerical case."""


class PGMError(DataError):
    pass


class MalformedHeaderError(PGMError):
    pass


class TruncatedDataError(PGMError):
    pass


class UnsupportedFormatError(PGMError):
    pass
