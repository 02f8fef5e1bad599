"""Shared exception types.

Errors that cross module boundaries (and the bases the CLI maps onto
exit codes) live here; narrowly scoped errors are defined next to the
code that raises them and subclass these bases where it makes sense.
"""


class ConfigError(Exception):
    """Invalid configuration: bad file, bad node, or bad parameter set."""


class ShapeError(ValueError):
    """Array/tensor shape violates an operation's contract."""


class LabelOutOfRangeError(ValueError):
    """A label map contains values outside {0..K-1} plus ignore_index."""


class CheckpointError(Exception):
    """Base class for checkpoint save/load failures."""
