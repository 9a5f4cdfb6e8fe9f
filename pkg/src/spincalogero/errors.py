"""Exception hierarchy shared across the package."""


class SpinCalogeroError(Exception):
    """Base class for all package errors."""


class UnsupportedAlgebraError(SpinCalogeroError, ValueError):
    """Catalog descriptor names an unknown family or an out-of-range size."""


class DimensionMismatchError(SpinCalogeroError, ValueError):
    pass


class DomainError(SpinCalogeroError, ValueError):
    """A base point lies outside the domain of a dynamical r-matrix."""


class DegenerateElementError(DomainError):
    """An element expected to be regular has (nearly) coinciding eigenvalues."""


class ConstraintError(SpinCalogeroError, ValueError):
    """A phase point violates a precondition on the constraint surface."""


class ConfigError(SpinCalogeroError, ValueError):
    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
