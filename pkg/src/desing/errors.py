"""Exception types shared across the engine.

Every deliberate refusal has its own type so callers (and the CLI) can tell a
bug from an input that is outside the supported class.
"""


class DesingError(Exception):
    """Base class for all engine-specific errors."""


class ParseError(DesingError):
    """Malformed polynomial text or problem file."""


class RingMismatch(DesingError):
    """Operands live over different coefficient rings."""


class ChartMismatch(DesingError):
    """Operands live on different charts or have incompatible variable counts."""


class NotPermissible(DesingError):
    """A requested center fails a permissibility requirement.

    Carries the index of the offending pair when one can be named.
    """

    def __init__(self, message, pair_index=None):
        super().__init__(message)
        self.pair_index = pair_index


class UnsupportedLocus(DesingError):
    """The action of the algorithm escapes the aligned (coordinate) class."""


class NotNice(DesingError):
    """No usable order-one element found when a contact hypersurface is needed."""


class ConditionIotaFails(DesingError):
    """The stalkwise nonvanishing condition for the induced object fails."""


class UndecidableMembership(DesingError):
    """Ideal membership asked outside the decidable fragment."""


class LedgerInconsistent(DesingError):
    """The factorization ledger failed its defining identity."""


class StepCapExceeded(DesingError):
    """The resolution driver hit its step budget without finishing."""


class NoWitness(DesingError):
    """A gamma value was requested at a stratum outside the singular locus."""
