class FishnetError(Exception):
    """Base class for every domain error raised by fishnet."""


class ConsentConfigError(FishnetError):
    def __init__(self, message: str, token: str = ""):
        super().__init__(message)
        self.token = token


class UsageError(FishnetError):
    pass


class TaggingError(FishnetError):
    pass


class UnknownTagError(FishnetError):
    def __init__(self, tag_hash: str):
        super().__init__(f"Unknown consent tag {tag_hash}")
        self.tag_hash = tag_hash


class LedgerError(FishnetError):
    pass


class CapacityError(LedgerError):
    pass


class EmptyBatchError(LedgerError):
    pass


class NotCustodianError(LedgerError):
    pass


class NoActiveWithdrawalError(LedgerError):
    pass


class AgentConfigError(LedgerError):
    pass


class LedgerTransportError(FishnetError):
    pass


class WithdrawalRejected(FishnetError):
    """The ledger refused a withdrawal; ``reason`` is the ledger's verbatim reason."""

    def __init__(self, reason: str):
        super().__init__(f"Withdrawal rejected: {reason}")
        self.reason = reason


class ScenarioError(FishnetError):
    pass
