from typing import List, Literal

from pydantic import BaseModel, Field

from fishnet.ledger.state import CompletionAction, EventKind


class AgentConfigIn(BaseModel):
    name: str
    user_agent_pattern: str
    ip_ranges: List[str]
    public_key: str

    class Config:
        from_attributes = True


class RegistryOut(BaseModel):
    version: int
    agents: List[AgentConfigIn]


class RegistryVersionOut(BaseModel):
    version: int


class TagBatchItem(BaseModel):
    hash: str
    sig: str
    custodian: str


class TagBatchIn(BaseModel):
    entries: List[TagBatchItem]


class TransactionReceipt(BaseModel):
    tx_id: str
    count: int
    first_seq: int
    last_seq: int


class EventIn(BaseModel):
    tag_hash: str
    kind: EventKind
    actor: str
    detail: str = ""


class EventOut(BaseModel):
    seq: int
    kind: EventKind
    actor: str
    tag_hash: str
    detail: str = ""

    class Config:
        from_attributes = True


class SeqOut(BaseModel):
    seq: int


class ChallengeOut(BaseModel):
    id: str
    nonce: str
    expiry: int


class WithdrawalIn(BaseModel):
    tag_hash: str
    tag_signature: str
    public_key: str
    challenge_id: str
    challenge_signature: str


class WithdrawalOut(BaseModel):
    status: Literal["accepted", "rejected"]
    seq: int | None = None
    request_id: str | None = None
    reason: str | None = None
    duplicate: bool = False


class CompletionIn(BaseModel):
    tag_hash: str
    custodian: str
    action: CompletionAction


class TagEntryOut(BaseModel):
    hash: str
    signature: str
    custodians: List[str]
    events: List[EventOut]
    withdrawal: str = "none"
    withdrawal_request_id: str | None = None


class EventsPage(BaseModel):
    events: List[EventOut] = Field(default_factory=list)
    high_water: int
