"""Exception hierarchy shared by all corefguard modules."""


class CorefGuardError(Exception):
    """Base class for every error raised by the toolkit."""


class ConllFormatError(CorefGuardError, ValueError):
    pass


class UnbalancedBrackets(ConllFormatError):
    pass


class InconsistentColumnCount(ConllFormatError):
    pass


class MissingEndMarker(ConllFormatError):
    pass


class ResourceError(CorefGuardError, ValueError):
    pass


class MalformedLine(ResourceError):
    pass


class EmptyResource(ResourceError):
    pass


class PoolExhausted(CorefGuardError, LookupError):
    """Every name of a sampling pool has already been drawn."""


class PlanDocumentMismatch(CorefGuardError, ValueError):
    pass


class EmptyGold(CorefGuardError, ValueError):
    """The gold clustering holds no mention, so no metric is defined."""


class EmptyTestHeads(CorefGuardError, ValueError):
    pass


class GapFormatError(CorefGuardError, ValueError):
    pass


class OffsetMismatch(GapFormatError):
    pass


class BadHeader(GapFormatError):
    pass


class StrataMismatch(CorefGuardError, ValueError):
    pass


class WidthOverflow(CorefGuardError, ValueError):
    pass


class EmptyGoldSet(CorefGuardError, ValueError):
    pass


class NonFiniteGradient(CorefGuardError, FloatingPointError):
    pass


class DivergedLoss(CorefGuardError, FloatingPointError):
    pass
