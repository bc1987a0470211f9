"""Exception types shared across the toolkit."""

from __future__ import annotations


class OntomatchError(Exception):
    """Base class for all toolkit errors."""


class ParseError(OntomatchError):
    """Malformed input file; carries line/position where known."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None, column: int | None = None):
        loc = ""
        if path:
            loc += f"{path}"
        if line is not None:
            loc += f":{line}"
            if column is not None:
                loc += f":{column}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line
        self.column = column


class UnknownFormatError(OntomatchError):
    """Input file is in neither of the supported ontology formats."""


class CycleError(OntomatchError):
    """Subclass graph contains a cycle; names one offending cycle."""

    def __init__(self, cycle: list[str]):
        super().__init__("subclass cycle detected: " + " -> ".join(cycle + cycle[:1]))
        self.cycle = cycle


class InsufficientDataError(OntomatchError):
    """Not enough labeled classes to draw the requested negative samples."""


class UndefinedScoreError(OntomatchError):
    """A score was requested over an empty label set."""


class ScorerTransportError(OntomatchError):
    """Remote scorer could not be reached; retryable."""


class ScorerProtocolError(OntomatchError):
    """Remote scorer replied with something other than the agreed schema."""


class ConfigError(OntomatchError):
    """Invalid experiment configuration; message lists field paths."""

    def __init__(self, problems: list[str]):
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))
        self.problems = problems


class StageError(OntomatchError):
    """A pipeline stage failed; names the stage and chains the cause."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.__cause__ = cause
