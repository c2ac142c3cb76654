"""stableweb: aged cadlag paths, web metrics, compactness checkers and
coalescing stable random walks."""

from ._backend import BACKEND
from .cadlag import (
    PiecewisePath,
    extend_flat,
    jumps_of,
    oscillation,
    path_dist,
    restrict,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "PiecewisePath",
    "restrict",
    "extend_flat",
    "jumps_of",
    "oscillation",
    "path_dist",
]
