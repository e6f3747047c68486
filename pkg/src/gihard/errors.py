"""Exception hierarchy shared by all modules."""


class GiHardError(Exception):
    """Base class for every error raised by this package."""


class ArityError(GiHardError, ValueError):
    """A tuple does not have the arity its container expects."""


class DomainError(GiHardError, ValueError):
    """A value lies outside the allowed domain (missing vertex, tuple not in relation, ...)."""


class DegenerateConstraintError(GiHardError, ValueError):
    """A Tseitin constraint would have an empty scope."""


class BudgetError(GiHardError, RuntimeError):
    """A search or materialization exceeded its configured budget."""


class PreconditionError(GiHardError, ValueError):
    """An input failed a verified precondition (not a solution, not an isomorphism, ...)."""


class GenerationError(GiHardError, RuntimeError):
    """Random generation gave up after exhausting its retry budget."""


class QueryError(GiHardError, ValueError):
    """An oracle was queried outside the level it was built for."""


class UnsupportedInstanceError(GiHardError, ValueError):
    """An instance lacks the structure an operation needs (e.g. gadget back-references)."""


class VerificationError(GiHardError, AssertionError):
    """A mechanical check of a lemma failed; ``lemma`` names the failing statement."""

    def __init__(self, lemma: str, detail: str = ""):
        self.lemma = lemma
        self.detail = detail
        super().__init__(f"{lemma}: {detail}" if detail else lemma)
