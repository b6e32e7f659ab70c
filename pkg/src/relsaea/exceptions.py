"""Exception types shared across the package."""


class RelsaeaError(Exception):
    """Base class for all package errors."""


class DomainError(RelsaeaError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class BudgetExceeded(RelsaeaError):
    """A true evaluation was requested after the budget ran out."""


class BalanceError(RelsaeaError, ValueError):
    """Label balancing needs a class that is absent from the input."""

    def __init__(self, label):
        self.label = label
        super().__init__(f"label class {label:+d} is absent; cannot balance")


class ConfigError(RelsaeaError, ValueError):
    """Invalid or incomplete configuration."""


class BackendError(RelsaeaError):
    """Relation backend failed at the transport level after all retries."""

    def __init__(self, message, anchor_index=None):
        self.anchor_index = anchor_index
        if anchor_index is not None:
            message = f"anchor {anchor_index}: {message}"
        super().__init__(message)
