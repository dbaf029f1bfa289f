"""Exception types shared across the library."""


class LetflabError(Exception):
    """Base class for library errors."""


class MomentDivergenceError(LetflabError, ValueError):
    """Second jump moments do not exist (upward-jump exponent <= 2)."""


class DegenerateModelError(LetflabError, ValueError):
    """Model parameters make a required denominator vanish."""


class UndefinedIRError(LetflabError, ValueError):
    """Information ratio undefined (zero active-wealth dispersion)."""


class ConfigError(LetflabError, ValueError):
    """Invalid scenario configuration."""


class DataError(LetflabError, ValueError):
    """Malformed or inconsistent input data."""


class TrainingDivergedError(LetflabError, RuntimeError):
    """Policy training produced a non-finite loss."""
