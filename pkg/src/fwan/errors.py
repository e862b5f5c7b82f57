"""Exception hierarchy for fwan."""


class FwanError(Exception):
    """Base class for all fwan errors."""


class InvalidParameter(FwanError, ValueError):
    pass


class MalformedMarkup(FwanError):
    """Raised when play markup cannot be parsed.

    Carries the 1-based line number of the offending line (``lineno``) and,
    when known, the source path.
    """

    def __init__(self, message, lineno=None, path=None):
        self.message = message
        self.lineno = lineno
        self.path = path
        super().__init__(str(self))

    def __str__(self):
        where = ""
        if self.path is not None:
            where = f"{self.path}:"
        if self.lineno is not None:
            where += f"{self.lineno}:"
        return f"{where} {self.message}" if where else self.message


class DuplicateLexiconEntry(FwanError):
    pass


class MismatchedParams(FwanError):
    pass


class NonConvergence(FwanError):
    pass


class DimensionMismatch(FwanError):
    pass


class MissingCandidates(FwanError):
    pass


class InsufficientTraining(FwanError):
    pass


class EmptyAuthorCanon(FwanError):
    pass


class RankDeficient(FwanError):
    pass


class InvalidExperiment(FwanError):
    pass


class SingletonCanon(FwanError):
    """An author with a single play cannot be leave-one-out validated.

    Leave-one-out skips such plays and records them instead of raising; the
    class exists so callers that insist on full coverage can raise it.
    """


class MissingStructure(FwanError):
    pass


class ManifestError(FwanError):
    pass
