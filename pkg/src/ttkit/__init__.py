"""Train tracks on punctured surfaces: moves, carrying, flat cones and orbit invariants."""

from .errors import TrackError
from .formats import format_track, parse_track, read_track
from .generators import catalog
from .moves import LEFT, RIGHT, CollapseMove, ShiftMove, SplitMove
from .track import Switch, TrainTrack, surface_signature, validate

__version__ = "0.1.0"

__all__ = [
    "TrackError", "format_track", "parse_track", "read_track", "catalog",
    "LEFT", "RIGHT", "CollapseMove", "ShiftMove", "SplitMove",
    "Switch", "TrainTrack", "surface_signature", "validate",
]
