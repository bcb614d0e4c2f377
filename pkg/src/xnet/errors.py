"""Exception hierarchy shared by all xnet modules."""

from __future__ import annotations


class XNetError(Exception):
    """Base class for every error raised by xnet."""


class InvalidParameterError(XNetError, ValueError):
    """An argument violates a documented precondition."""


class ResourceError(XNetError):
    """The requested computation is too large for the chosen method."""


class ConvergenceError(XNetError):
    """An iterative method did not reach its tolerance.

    The best estimate found so far is kept on ``best`` so callers can
    still inspect it.
    """

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class FormatError(XNetError, ValueError):
    """A file did not match its expected binary or text layout."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class InvalidStateError(XNetError, RuntimeError):
    """An object is not in the state an operation requires."""


class TrainingDivergedError(XNetError, FloatingPointError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")
        self.epoch = epoch
        self.loss = loss
