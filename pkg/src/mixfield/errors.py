"""Exception types raised across the package."""


class MixfieldError(Exception):
    """Base class for every error raised by mixfield."""


class SumNotOne(MixfieldError, ValueError):
    pass


class NegativeProb(MixfieldError, ValueError):
    pass


class DuplicateLabel(MixfieldError, ValueError):
    pass


class BadArity(MixfieldError, ValueError):
    pass


class BadSubset(MixfieldError, ValueError):
    pass


class TooManyAtoms(MixfieldError):
    """A computation would need more atoms, cells or subsets than its cap allows."""


class WindowTooLarge(TooManyAtoms):
    pass


class NumericFailure(MixfieldError, ArithmeticError):
    pass


class CarrierTooSmall(MixfieldError, ValueError):
    pass


class BadDimension(MixfieldError, ValueError):
    pass


class DimensionMismatch(MixfieldError, ValueError):
    pass


class BadRates(MixfieldError, ValueError):
    pass


class MissingUniformized(MixfieldError, ValueError):
    pass


class InsufficientSamples(MixfieldError, ValueError):
    pass
