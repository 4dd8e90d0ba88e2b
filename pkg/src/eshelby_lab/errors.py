"""Exception hierarchy shared by all modules."""


class EshelbyError(Exception):
    """Base class for library errors."""


class AdmissibilityError(EshelbyError, ValueError):
    """Material parameters violate convexity or well-ordering."""


class GeometryError(EshelbyError, ValueError):
    """Invalid shape description, mesh file or sampling request."""


class NumericalError(EshelbyError, RuntimeError):
    """A numerical procedure failed to reach its accuracy target."""
