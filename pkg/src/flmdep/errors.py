"""Exception hierarchy shared by the library and the CLI."""


class FlmdepError(ValueError):
    """Base class for every error raised deliberately by flmdep."""


class AlignmentError(FlmdepError):
    """Curves, grids or decompositions whose shapes do not line up."""


class RankError(FlmdepError):
    """More principal components requested than the sample supports."""

    def __init__(self, requested, available):
        self.requested = requested
        self.available = available
        super().__init__(
            f"kn={requested} exceeds the numerical rank of the covariance "
            f"operator (m={available} components available)"
        )


class DegenerateVarianceError(FlmdepError):
    """A studentizing variance estimate is zero."""


class DegenerateSignalError(FlmdepError):
    """A signal-to-noise calibration was asked for a null slope."""


class ConfigurationError(FlmdepError):
    """Incompatible statistic/method combination or invalid scenario field."""

    def __init__(self, message, problems=None):
        self.problems = list(problems) if problems else [message]
        super().__init__(message)


class DataError(FlmdepError):
    """Malformed input files. Carries the offending row/column when known."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
