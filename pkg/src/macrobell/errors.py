"""Exception types raised by the simulator."""


class MacroBellError(Exception):
    """Base class for all simulator failures."""


class DomainError(MacroBellError, ValueError):
    """An input lies outside the domain an operation is defined on."""


class TruncationError(MacroBellError):
    """Fock-space truncation discards more probability than allowed."""

    def __init__(self, message, tail, required_n_max):
        super().__init__(message)
        self.tail = tail
        self.required_n_max = required_n_max


class DegenerateBasisError(MacroBellError):
    """Cat basis states coincide, so the two outcomes are not distinguishable."""


class NoOscillationError(MacroBellError):
    """No tunnelling oscillation could be located in the probed horizon."""
