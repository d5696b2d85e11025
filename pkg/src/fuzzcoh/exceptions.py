"""Exception hierarchy shared across the package.

The CLI maps ConfigError to exit code 2 and NumericError to exit code 3.
"""


class FuzzCohError(Exception):
    """Base class for all package errors."""


class ConfigError(FuzzCohError):
    """Invalid configuration, file layout, or argument combination."""


class DataError(FuzzCohError):
    """Malformed input data (bad cells, NaN values, ragged rows)."""


class NumericError(FuzzCohError):
    """A numeric computation failed or hit an unrecoverable degeneracy."""


class DegenerateBlockError(NumericError):
    """A block cannot be processed (e.g. a flatlined channel)."""

    def __init__(self, block_index: int, reason: str):
        self.block_index = block_index
        self.reason = reason
        super().__init__(f"block {block_index}: {reason}")
