"""Exception types shared across the package."""


class DmnerError(Exception):
    """Base class for all toolkit errors."""


class ParseError(DmnerError):
    """A line of an input file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(DmnerError):
    """Invalid configuration value or missing required setting."""


class MissingEmbeddingError(DmnerError):
    """A text has no vector in the store and fallback is disabled."""

    def __init__(self, text: str):
        self.text = text
        super().__init__(f"no embedding for text: {text!r}")
