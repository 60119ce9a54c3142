"""Exception hierarchy shared by the library and the command-line front end."""

from __future__ import annotations


class CBRError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class GrammarError(CBRError):
    """Input document does not follow the game file grammar."""

    exit_code = 2

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class GameValidationError(CBRError):
    """A game description parsed but violates a game invariant."""

    exit_code = 3

    def __init__(self, defects: list[str]):
        self.defects = list(defects)
        super().__init__("; ".join(self.defects))


class ConfigError(CBRError):
    """Dynamics configuration is inconsistent with the game it is applied to."""

    exit_code = 3


class EpsilonRangeError(ConfigError):
    """Mutation rate outside the admissible open interval (0, 1/M)."""


class CapExceededError(CBRError):
    """Problem is larger than the exhaustive-analysis caps allow."""

    exit_code = 4
