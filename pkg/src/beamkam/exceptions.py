"""Exception types raised across the package."""


class InvalidParameterError(ValueError):
    """A physical or numerical parameter is outside its admissible range."""


class InvalidInputError(ValueError):
    """Malformed input (incompatible truncations, missing angles, ...)."""


class InvalidBlockError(KeyError):
    """Requested forcing block does not exist."""


class OutOfClassError(ValueError):
    """A normal multi-index with |l|_1 > 2 was passed where |l|_1 <= 2 is required."""


class RealityViolation(ArithmeticError):
    """A quantity that must be real carries a non-negligible imaginary part."""


class ResonantParameterError(ArithmeticError):
    """A small divisor failed the non-resonance screen.

    Attributes
    ----------
    k : tuple of int
        Fourier vector of the offending term.
    l : tuple of int
        Normal multi-index ``gamma - kappa`` of the offending term.
    step : int
        KAM step at which the screen failed.
    divisor, threshold : float
    """

    def __init__(self, k, l, step, divisor, threshold):
        self.k = tuple(int(x) for x in k)
        self.l = tuple(int(x) for x in l)
        self.step = int(step)
        self.divisor = float(divisor)
        self.threshold = float(threshold)
        super().__init__(
            f"resonant parameter at step {self.step}: k={self.k}, l={self.l}, "
            f"|divisor|={abs(self.divisor):.3e} < threshold={self.threshold:.3e}"
        )


class DivergenceWarning(ArithmeticError):
    """Lie series tail estimate is not contracting."""

    def __init__(self, ratio, message=None):
        self.ratio = float(ratio)
        super().__init__(message or f"non-contracting Lie series tail (ratio {self.ratio:.3g} >= 1)")
