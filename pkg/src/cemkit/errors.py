"""Exception hierarchy shared across the kit."""


class CemkitError(Exception):
    """Base class for all kit errors."""


class InvalidParameterError(CemkitError, ValueError):
    pass


class SchemaError(CemkitError):
    """Input data violates the canonical schema.

    ``file`` and ``row`` locate the offending record when known; ``row`` is the
    1-based data row (header excluded).
    """

    def __init__(self, message, file=None, row=None, column=None):
        self.file = file
        self.row = row
        self.column = column
        where = []
        if file is not None:
            where.append(str(file))
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class ConfigurationError(CemkitError):
    pass


class InfeasibleError(CemkitError):
    """A planning or simulation problem has no feasible solution.

    ``rows`` holds the tag strings of an irreducible-ish infeasible row subset.
    """

    def __init__(self, message, period=None, rows=()):
        self.period = period
        self.rows = tuple(rows)
        detail = ""
        if rows:
            shown = ", ".join(self.rows[:10])
            more = f" (+{len(self.rows) - 10} more)" if len(self.rows) > 10 else ""
            detail = f"; conflicting rows: {shown}{more}"
        label = f"period {period}: " if period is not None else ""
        super().__init__(label + message + detail)


class SolverError(CemkitError):
    def __init__(self, message, trace=()):
        self.trace = list(trace)
        super().__init__(message)


class ComparisonError(CemkitError):
    pass
