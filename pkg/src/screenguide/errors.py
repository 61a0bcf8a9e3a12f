"""Exception types shared across the package."""


class ConfigError(Exception):
    """Raised for an invalid run configuration.

    Carries the offending key and, when known, the line of the config file
    so batch drivers can report actionable messages.
    """

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if key is not None:
            prefix += f"[{key}] "
        super().__init__(prefix + message)


class NumericalError(RuntimeError):
    """A linear solve or extraction step failed beyond recovery."""


class BracketError(RuntimeError):
    """A 1D search bracket does not contain an interior maximum."""


class UnsupportedRegimeError(ValueError):
    """Parameters outside the single-propagating-mode regime."""
