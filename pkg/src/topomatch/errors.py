"""Exception taxonomy shared across the toolkit.

The CLI maps these onto exit codes: InputError -> 2,
ConsistencyError -> 3, NumericError -> 4.
"""


class TopomatchError(Exception):
    """Base class for all toolkit errors."""


class InputError(TopomatchError):
    """Malformed or missing input data (bad file, bad row, bad config key)."""


class ConsistencyError(TopomatchError):
    """Mismatched artifacts, e.g. index built by a different model."""


class NumericError(TopomatchError):
    """Non-finite values encountered during training or inference."""
