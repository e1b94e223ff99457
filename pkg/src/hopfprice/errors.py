"""Exception hierarchy.

Input problems (malformed tables, out-of-range arguments) derive from
:class:`InputError`; model failures (domain violations, capacity limits)
derive from :class:`ModelError`.  The CLI maps the two families to exit
codes 2 and 1 respectively.
"""


class HopfPriceError(Exception):
    pass


class InputError(HopfPriceError, ValueError):
    pass


class ModelError(HopfPriceError, ArithmeticError):
    pass


# group tables
class InvalidGroup(InputError):
    pass


class NonAssociative(InvalidGroup):
    pass


class NoIdentity(InvalidGroup):
    pass


class NoInverse(InvalidGroup):
    pass


class GroupMismatch(InputError):
    pass


class DimMismatch(InputError):
    pass


class OutOfRange(InputError):
    pass


class NotHermitian(InputError):
    pass


class NotUnit(InputError):
    pass


class InvalidCorrelation(InputError):
    pass


class IndexOrder(InputError):
    pass


class SizeLimit(InputError):
    pass


class MomentInconsistency(InputError):
    pass


class NoRoot(InputError):
    pass


# model failures
class NotCopositive(ModelError):
    pass


class DomainViolation(ModelError):
    def __init__(self, message, min_eigen=None):
        super().__init__(message)
        self.min_eigen = min_eigen


class DimOverflow(ModelError):
    pass


class DimTooLarge(ModelError):
    pass


class FactorizationFailure(ModelError):
    pass
