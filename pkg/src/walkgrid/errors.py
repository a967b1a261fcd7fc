"""Exception hierarchy shared across the package.

Exit-code mapping for the CLI lives in :mod:`walkgrid.cli`; everything here
derives from :class:`WalkgridError` so callers can catch broadly.
"""


class WalkgridError(Exception):
    """Base class for all walkgrid errors."""


class ValidationError(WalkgridError):
    """Bad user input: configs, flags, malformed requests."""


class ParseError(ValidationError):
    """Malformed GeoJSON or scenario input; message carries feature context."""


class EmptyInput(ValidationError):
    """An operation received an empty collection where one or more items are required."""


class EmptyResult(ValidationError):
    """Parsing produced zero usable features."""


class MissingProperty(ParseError):
    """A required feature property is absent; message names the feature."""


class DegenerateWard(ValidationError):
    """A ward polygon with non-positive area."""


class InvalidGeometry(ValidationError):
    """Self-intersecting or otherwise broken polygon input."""


class UnknownCategory(ValidationError):
    """A config references a category absent from the taxonomy."""


class ConfigError(ValidationError):
    """Structurally invalid user config; message carries the entry index."""


class OutOfBounds(WalkgridError):
    """Query point outside the grid extent."""


class FrameMismatch(WalkgridError):
    """Geometries built against different projection references were mixed."""


class TaxonomyMismatch(WalkgridError):
    """Store taxonomy hash differs from the taxonomy in use."""


class VersionError(WalkgridError):
    """Store file format version is not supported."""


class ProviderError(WalkgridError):
    """Isochrone provider failed; carries the amenity id when known."""

    def __init__(self, message: str, amenity_id: str | None = None):
        super().__init__(message)
        self.amenity_id = amenity_id


class ContractError(ProviderError):
    """Provider response did not contain the requested contour."""


class EmptyIsochrone(ProviderError):
    """Provider returned a zero-area shape."""


class ComplexityGuard(WalkgridError):
    """Instance exceeds the exact-oracle size limits."""


class BoundaryPointWarning(UserWarning):
    """Point-refinement query lies within one cell of a catchment boundary."""
