"""Exception types shared across the toolkit.

All errors raised by vqakit derive from :class:`VqaError` so callers (and the
CLI) can catch toolkit failures in one place.
"""

from __future__ import annotations


class VqaError(Exception):
    """Base class for all toolkit errors."""


# --- clip ingestion ---------------------------------------------------------

class ParseError(VqaError):
    def __init__(self, position: int, token: str):
        self.position = position
        self.token = token
        super().__init__(f"malformed input at byte {position}: {token!r}")


class TruncatedFrame(VqaError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"truncated payload for frame {index}")


class Unsupported(VqaError):
    def __init__(self, tag: str):
        self.tag = tag
        super().__init__(f"unsupported colorspace tag {tag!r}")


class DimensionMismatch(VqaError):
    pass


class EmptyInput(VqaError):
    pass


# --- sampling ---------------------------------------------------------------

class InsufficientFrames(VqaError):
    pass


class SourceTooSmall(VqaError):
    pass


# --- features ---------------------------------------------------------------

class PlaneTooSmall(VqaError):
    pass


# --- regressors -------------------------------------------------------------

class NoTrainablePairs(VqaError):
    pass


class NumericalError(VqaError):
    pass


# --- scoring ----------------------------------------------------------------

class OutOfRange(VqaError):
    pass


class DegenerateScores(VqaError):
    def __init__(self, model: int | str):
        self.model = model
        super().__init__(f"score list {model!r} has zero variance; cannot z-score")


# --- evaluation -------------------------------------------------------------

class UndefinedCorrelation(VqaError):
    pass


class JoinError(VqaError):
    def __init__(self, clip_id: str):
        self.clip_id = clip_id
        super().__init__(f"no matching row for clip_id {clip_id!r}")


class DuplicateId(VqaError):
    def __init__(self, clip_id: str):
        self.clip_id = clip_id
        super().__init__(f"duplicate clip_id {clip_id!r}")


# --- benchmarking -----------------------------------------------------------

class SpecMismatch(VqaError):
    pass


class BenchRunError(VqaError):
    def __init__(self, run_index: int, cause: BaseException):
        self.run_index = run_index
        super().__init__(f"pipeline failed on run {run_index}: {cause}")
