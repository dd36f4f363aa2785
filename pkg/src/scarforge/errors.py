"""Exception types shared across the toolkit."""


class ScarforgeError(Exception):
    """Base class for all toolkit-specific failures."""


class DataError(ScarforgeError):
    """Manifest, image file, or schema problem."""


class RecordRejected(ScarforgeError):
    """Input record cannot be preprocessed (empty mask, anatomy lost)."""


class DegenerateLandmarksError(ScarforgeError):
    """RV insertion points coincide or sit on the rotation center."""


class AmbiguousAnatomyError(ScarforgeError):
    """Insertion-point geometry does not determine the septal sweep direction."""


class TopologyError(ScarforgeError):
    """Myocardial mask lacks the expected annulus topology (no cavity or no exterior)."""


class EmptyCandidateError(ScarforgeError):
    """Scar candidate region contains no pixels."""


class CaptionParseError(ScarforgeError):
    """Text does not belong to the caption grammar."""

    def __init__(self, text: str, position: int, reason: str):
        super().__init__(f"cannot parse caption at position {position}: {reason}")
        self.text = text
        self.position = position
        self.reason = reason


class MetricUndefinedError(ScarforgeError):
    """Requested metric is undefined for the given inputs."""


class InvariantViolation(ScarforgeError):
    """Dataset re-validation found a broken invariant."""
