"""Exception hierarchy shared by every pipeline stage."""

from __future__ import annotations


class WalkerStageError(Exception):
    """Base class for all errors raised by this package."""


# ingest
class MalformedFile(WalkerStageError, ValueError):
    pass


class NonFiniteSample(WalkerStageError, ValueError):
    def __init__(self, row: int, channel: str):
        self.row = row
        self.channel = channel
        super().__init__(f"non-finite sample at row {row}, channel {channel}")


class LengthMismatch(WalkerStageError, ValueError):
    pass


class EncoderNotMonotone(WalkerStageError, ValueError):
    pass


class UnknownLabel(WalkerStageError, ValueError):
    pass


class DuplicateSubject(WalkerStageError, ValueError):
    pass


# preprocess
class EvenWindow(WalkerStageError, ValueError):
    pass


class WindowTooLarge(WalkerStageError, ValueError):
    pass


class NoStationaryPrefix(WalkerStageError, ValueError):
    pass


class NoForwardMotion(WalkerStageError, ValueError):
    pass


class ConstantSignal(WalkerStageError, ValueError):
    pass


class TooShort(WalkerStageError, ValueError):
    pass


class EmptySignal(WalkerStageError, ValueError):
    pass


class NoMotion(WalkerStageError, ValueError):
    pass


# features
class InsufficientSteps(WalkerStageError, ValueError):
    pass


class UnknownExtractor(WalkerStageError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class CatalogNotFound(WalkerStageError, FileNotFoundError):
    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"catalog not found: {path}")

    def __str__(self) -> str:
        return f"catalog not found: {self.path}"


class SubjectError(WalkerStageError):
    """Wraps a per-subject failure with the subject id attached."""

    def __init__(self, subject_id: str, cause: Exception):
        self.subject_id = subject_id
        self.cause = cause
        super().__init__(f"subject {subject_id}: {cause}")


# select / forest / eval
class DegenerateGroups(WalkerStageError, ValueError):
    pass


class TooFewRows(WalkerStageError, ValueError):
    pass


class WidthMismatch(WalkerStageError, ValueError):
    pass


class SingleClass(WalkerStageError, ValueError):
    pass


class EmptyMatrix(WalkerStageError, ValueError):
    pass


class KTooLarge(WalkerStageError, ValueError):
    pass


class CatalogMismatch(WalkerStageError, ValueError):
    pass


# synthgen
class InvalidProfile(WalkerStageError, ValueError):
    pass
