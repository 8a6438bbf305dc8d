"""Exception types raised across the package."""

from __future__ import annotations


class InvalidParameter(ValueError):
    pass


class ParseError(ValueError):
    """Malformed DOP text; ``position`` is the 0-based offset of the problem."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class NoParent(ValueError):
    pass


class TooLarge(RuntimeError):
    pass


class UndefinedStatistic(ValueError):
    """range of a leaf, or gap of the root."""


class InvalidFeedback(ValueError):
    pass


class ConfigError(ValueError):
    pass
