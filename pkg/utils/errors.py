"""
Exception hierarchy for the policy explorer.

Every error raised on purpose by the package derives from ExplorerError so the
command line front end can map it to an exit status.
"""

from typing import Any, List, Optional


class ExplorerError(Exception):
    """Base class for all explorer errors."""
    pass


class ConfigurationError(ExplorerError, ValueError):
    """Raised when a configuration document or command line option is invalid."""

    def __init__(self, message: str, fields: Optional[List[str]] = None):
        super().__init__(message)
        self.fields = fields or []


class DomainError(ExplorerError, ValueError):
    """Raised when an operation is asked for more than its domain holds."""
    pass


class NonPositiveAverted(ExplorerError):
    """The policy averted no DALYs relative to doing nothing."""

    def __init__(self, dalys_averted: float):
        super().__init__(
            f"Policy averted {dalys_averted:.6g} DALYs; cost per DALY averted is undefined"
        )
        self.dalys_averted = dalys_averted


class IllConditioned(ExplorerError):
    """Kernel matrix factorisation failed or produced a negative variance."""
    pass


class NumericalError(ExplorerError):
    """A gradient or update produced non-finite values."""
    pass


class ExternalSimError(ExplorerError):
    """
    An external simulator process failed.

    Attributes:
        reason: One of "failed", "timeout", "malformed", "circuit_open"
        command: The argument vector that was spawned
        returncode: Process exit status, if it exited
        stderr: Tail of captured standard error
    """

    def __init__(
        self,
        message: str,
        reason: str = "failed",
        command: Optional[List[str]] = None,
        returncode: Optional[int] = None,
        stderr: str = "",
    ):
        super().__init__(message)
        self.reason = reason
        self.command = command or []
        self.returncode = returncode
        self.stderr = stderr

    def __str__(self) -> str:
        text = f"[{self.reason}] {self.args[0]}"
        if self.returncode is not None:
            text += f" (exit {self.returncode})"
        if self.stderr:
            text += f"\n  stderr: {self.stderr}"
        return text


class BatchAbortedError(ExplorerError):
    """A batch could not be evaluated: its baseline or most of its proposals failed."""

    def __init__(self, message: str, records: Optional[List[Any]] = None):
        super().__init__(message)
        self.records = records or []


class EmptyRunsError(ExplorerError):
    """A runs log holds no successful record to regress."""
    pass
