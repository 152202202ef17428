"""
Eccezioni di FastMM.

Tutte derivano da FastMMError; quelle di validazione input sono anche
ValueError, così il codice chiamante può intercettarle in modo generico.
"""

from typing import Optional, Sequence, Tuple


class FastMMError(Exception):
    """Root of every error raised by the laboratory."""


class DimensionError(FastMMError, ValueError):
    """Operand shapes do not conform."""


class RingError(FastMMError, ValueError):
    """A coefficient cannot be represented in the entry ring."""


class UndefinedExponentError(FastMMError, ValueError):
    """log base mkn is undefined for mkn = 1."""


class RangeError(FastMMError, ValueError):
    """
    Input value outside its admissible range.

    Attributes:
        positions: indices of the offending elements (may be empty)
    """

    def __init__(self, message: str, positions: Sequence[int] = ()):
        super().__init__(message)
        self.positions = tuple(positions)


class VerificationError(FastMMError):
    """
    An object that must be verified failed verification.

    Attributes:
        triple: first violated (alpha, beta, gamma) index triple, if known
    """

    def __init__(self, message: str, triple: Optional[Tuple[int, int, int]] = None):
        super().__init__(message)
        self.triple = triple


class ParseError(FastMMError, ValueError):
    """Malformed algorithm file; `line` is 1-based."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line
