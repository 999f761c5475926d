"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI maps it to:
1 usage/config, 2 data or format, 3 numerical failure.
"""

from __future__ import annotations

from typing import Any, Dict, Optional


class BdcAdapterError(Exception):
    exit_code = 2

    def __init__(self, message: str, *, offset: Optional[int] = None) -> None:
        super().__init__(message)
        self.offset = offset

    def to_record(self) -> Dict[str, Any]:
        """One-line machine-parsable description (used for CLI stderr)."""
        rec: Dict[str, Any] = {
            "error": type(self).__name__,
            "exit_code": self.exit_code,
            "reason": str(self),
        }
        if self.offset is not None:
            rec["offset"] = self.offset
        return rec


class UsageError(BdcAdapterError):
    exit_code = 1


class ConfigError(BdcAdapterError, ValueError):
    exit_code = 1


class ShapeError(BdcAdapterError, ValueError):
    """Dimension mismatch between operands."""


class NonFiniteError(BdcAdapterError, ValueError):
    """NaN or Inf in an input that must be finite."""


class DegenerateInputError(BdcAdapterError, ValueError):
    """Zero-norm vectors, coincident observations, constant samples."""


class InsufficientDataError(BdcAdapterError, ValueError):
    pass


class BankFormatError(BdcAdapterError, ValueError):
    """Feature bank bytes do not match the documented layout."""


class BadMagicError(BankFormatError):
    pass


class VersionMismatchError(BankFormatError):
    pass


class TruncatedError(BankFormatError):
    pass


class TrailingBytesError(BankFormatError):
    pass


class NormViolationError(BankFormatError):
    pass


class ManifestError(BdcAdapterError, ValueError):
    pass


class CheckpointError(BdcAdapterError, ValueError):
    pass


class ChecksumMismatchError(CheckpointError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class NumericalFailure(BdcAdapterError, RuntimeError):
    exit_code = 3
