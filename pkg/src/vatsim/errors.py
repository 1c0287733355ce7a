class ConfigurationError(ValueError):
    """Invalid model or run configuration."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EstimationError(ValueError):
    """A statistical estimate cannot be formed from the given samples."""
