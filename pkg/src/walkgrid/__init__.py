"""walkgrid: personalized walking-accessibility scoring on a metric grid.

Offline, a city is discretized into square cells and each cell gets a count
vector of reachable amenities per category. Online, a user's category
preferences (tier + distance-decay appetite) collapse those counts into a
0..1 score per cell, ward, or point in milliseconds.
"""

__version__ = "0.1.0"

from .errors import (
    ComplexityGuard,
    ConfigError,
    ContractError,
    DegenerateWard,
    EmptyInput,
    EmptyIsochrone,
    EmptyResult,
    FrameMismatch,
    InvalidGeometry,
    MissingProperty,
    OutOfBounds,
    ParseError,
    ProviderError,
    TaxonomyMismatch,
    UnknownCategory,
    ValidationError,
    VersionError,
    WalkgridError,
)
from .geo import (
    DEFAULT_CELL_SIZE_M,
    EARTH_RADIUS_M,
    Frame,
    Grid,
    LatLon,
    PlanarPoint,
    Polygon,
    build_grid,
    intersection_area,
    project,
    unproject,
)

__all__ = [
    "ComplexityGuard",
    "ConfigError",
    "ContractError",
    "DEFAULT_CELL_SIZE_M",
    "DegenerateWard",
    "EARTH_RADIUS_M",
    "EmptyInput",
    "EmptyIsochrone",
    "EmptyResult",
    "Frame",
    "FrameMismatch",
    "Grid",
    "InvalidGeometry",
    "LatLon",
    "MissingProperty",
    "OutOfBounds",
    "ParseError",
    "PlanarPoint",
    "Polygon",
    "ProviderError",
    "TaxonomyMismatch",
    "UnknownCategory",
    "ValidationError",
    "VersionError",
    "WalkgridError",
    "build_grid",
    "intersection_area",
    "project",
    "unproject",
    "__version__",
]
