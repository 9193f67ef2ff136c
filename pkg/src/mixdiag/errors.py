"""Shared exception types for the mixdiag package."""


class MixdiagError(Exception):
    """Base class for all package-specific errors."""


class ParseError(MixdiagError):
    """Malformed input text (CSV logs, N-Triples, automaton or query JSON)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)
