class TrackError(Exception):
    """Base class for domain errors; the CLI maps these to exit code 1."""


class MalformedSlots(TrackError):
    pass


class UnknownBranch(TrackError):
    pass


class ExceptionalSurface(TrackError):
    pass


class ParseError(TrackError):
    pass


class NotLargeBranch(TrackError):
    pass


class NotMixedBranch(TrackError):
    pass


class NotCollapsible(TrackError):
    pass


class TieCollision(TrackError):
    pass


class NotCarried(TrackError):
    pass


class Ambiguous(TrackError):
    pass


class NotCarriedBySplit(TrackError):
    pass


class CarriedBySplit(TrackError):
    pass


class IncompatibleLocalPicture(TrackError):
    pass


class NonTermination(TrackError):
    pass


class NotInCone(TrackError):
    pass


class RadiusExceeded(TrackError):
    pass


class SignatureMismatch(TrackError):
    pass


class InvalidGluing(TrackError):
    pass


class UnknownCurve(TrackError):
    pass


class UnknownName(TrackError):
    pass


class MoveFailed(TrackError):
    """A move inside a word could not be applied."""

    def __init__(self, index, move, cause):
        super().__init__(f"move {index} ({move}) failed: {cause}")
        self.index = index
        self.move = move
        self.cause = cause
