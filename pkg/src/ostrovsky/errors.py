"""Exception types raised by the library."""


class GridMismatch(ValueError):
    """Two fields that must share a grid do not."""


class NonZeroMean(ValueError):
    """The nonlocal solve was handed data whose mean is not zero."""


class DivergesAtZero(ValueError):
    """|f'(u)|/|u| is unbounded as u -> 0, so the flux is not subquadratic."""


class ConfigError(ValueError):
    """Malformed experiment configuration."""


class BlowUp(RuntimeError):
    """A sample became non-finite or exceeded the blow-up threshold."""

    def __init__(self, time, linf, threshold):
        self.time = float(time)
        self.linf = float(linf)
        self.threshold = float(threshold)
        super().__init__(
            f"blow-up at t={self.time:.6g}: max|u|={self.linf:.6g} "
            f"(threshold {self.threshold:.6g})")
