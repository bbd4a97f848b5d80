"""Exception types shared across the package."""


class SmmError(Exception):
    """Base class for all smmfit errors."""


class UnknownToken(SmmError):
    """A token outside the alphabet was encountered under the reject policy."""

    def __init__(self, position: int, token: str):
        self.position = position
        self.token = token
        super().__init__(f"unknown token {token!r} at position {position}")


class SequenceTooShort(SmmError):
    """Sequence shorter than the m+1 symbols needed for one transition."""


class DegenerateInput(SmmError):
    """Fewer than two observed contexts; no pairwise structure exists."""


class MismatchedElements(SmmError):
    """Two partitions do not cover the same element set."""


class EmptyGroup(SmmError):
    """A partition group contains no contexts."""


class UndefinedBound(SmmError):
    """Recovery bound undefined because condition (A2) fails."""


class SingleCluster(SmmError):
    """Quantity undefined for a single-cluster partition."""


class PreconditionViolated(SmmError):
    """An analytic precondition (e.g. neighbor count) does not hold."""


class MalformedFasta(SmmError):
    """Input is not parseable as FASTA."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"malformed FASTA at line {line}: {reason}")


class SegmentTooShort(SmmError):
    """Segment too short to score under the model order."""
