class TraceLabError(Exception):
    """Base class for every error raised by trace_lab."""


class SchemaError(TraceLabError):
    """A file could not be parsed as any known object."""


class PreconditionError(TraceLabError):
    """An operation was called outside its domain."""


class ClosureError(TraceLabError):
    """Algebra closure did not stabilize within the pass cap."""


class EmptyInputError(PreconditionError):
    pass


class DimensionMismatchError(PreconditionError):
    pass


class IndexRangeError(PreconditionError):
    pass


class NotUnitaryError(PreconditionError):
    pass


class InvalidRepresentationError(PreconditionError):
    pass


class RankMismatchError(PreconditionError):
    pass


class DiagonalMismatchError(PreconditionError):
    """The e- and f-diagonals differ, so the trace does not factor through the amalgam."""


class UnsupportedDimensionError(PreconditionError):
    pass


class NoAdmissibleRankError(PreconditionError):
    pass


class SpectrumAvoidanceError(PreconditionError):
    pass


class InvalidTableError(PreconditionError):
    pass


class NotNormalizedError(PreconditionError):
    pass
