"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: contract/validation problems exit 1,
file-level problems (missing, malformed, truncated) exit 2.
"""


class DpfError(Exception):
    """Base class for all package errors."""


class ContractError(DpfError):
    """A documented precondition or shape contract was violated."""


class SchemaError(DpfError):
    """Structured input (annotation JSON, config JSON) failed validation."""


class FileFormatError(DpfError):
    """A binary file (netpbm image, checkpoint) is malformed or truncated."""

    def __init__(self, message: str, *, path: str | None = None, offset: int | None = None):
        detail = message
        if path is not None:
            detail = f"{path}: {detail}"
        if offset is not None:
            detail = f"{detail} (byte offset {offset})"
        super().__init__(detail)
        self.path = path
        self.offset = offset


class NumericsError(DpfError):
    """A numeric diagnostic failed (non-finite loss, gradient, or output)."""
