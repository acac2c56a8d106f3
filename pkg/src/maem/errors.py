class MaemError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(MaemError, ValueError):
    """Invalid parameter or configuration value."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class DegenerateStateError(MaemError):
    """The wealth vector cannot be advanced (e.g. every agent is bankrupt)."""


class InsufficientDataError(MaemError):
    """A fit was requested with too few usable points."""


class UndefinedCorrelationError(MaemError, ValueError):
    """Correlation of a sequence with zero variance."""


class ResultsIOError(MaemError, OSError):
    """Reading or writing a results file failed."""

    def __init__(self, path, message):
        self.path = str(path)
        super().__init__(f"{path}: {message}")
