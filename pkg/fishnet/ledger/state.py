"""
Single-node, deterministic simulation of the consent ledger.

One object plays the three contract roles: the consent logger (tag entries and
their journey events), the agent configurations registry and the consent
request handler (challenge-response withdrawal). All mutations go through one
lock and are journaled so a run can be replayed call for call.
"""

import logging
import threading
import time
from dataclasses import asdict, dataclass, field
from enum import Enum
from functools import wraps
from typing import Any

import orjson

from fishnet.core.consent import CrawlerAgentConfig
from fishnet.core.crypto import Challenge, Digest, NonceSource, keccak256, random_nonce, verify_digest
from fishnet.core.exceptions import (
    CapacityError,
    EmptyBatchError,
    FishnetError,
    LedgerError,
    NoActiveWithdrawalError,
    NotCustodianError,
    UnknownTagError,
)

logger = logging.getLogger(__name__)

TX_CAPACITY = 47_000
CHALLENGE_TTL = 1000
REQUEST_HANDLER = "consent-request-handler"


class EventKind(str, Enum):
    CRAWL = "crawl"
    TRANSFER = "transfer"
    TRAINING = "training"
    WITHDRAWAL_REQUESTED = "withdrawal-requested"
    DELETION_COMPLETED = "deletion-completed"
    RETRAINING_COMPLETED = "retraining-completed"


JOURNEY_KINDS = frozenset({EventKind.CRAWL, EventKind.TRANSFER, EventKind.TRAINING})
CUSTODY_KINDS = frozenset({EventKind.TRANSFER, EventKind.TRAINING})


class CompletionAction(str, Enum):
    DELETION = "deletion"
    RETRAINING = "retraining"


class RejectReason(str, Enum):
    BAD_TAG_SIGNATURE = "bad-tag-signature"
    BAD_CHALLENGE_SIGNATURE = "bad-challenge-signature"
    CHALLENGE_EXPIRED_OR_CONSUMED = "challenge-expired-or-consumed"
    UNKNOWN_TAG = "unknown-tag"


@dataclass(frozen=True)
class LedgerEvent:
    seq: int
    kind: EventKind
    actor: str
    tag_hash: str
    detail: str = ""


@dataclass(frozen=True)
class TagSubmission:
    hash: str
    signature: str
    custodian: str


@dataclass(frozen=True)
class LedgerTransaction:
    tx_id: str
    entries: tuple[TagSubmission, ...]
    first_seq: int
    last_seq: int


@dataclass(frozen=True)
class WithdrawalRequest:
    tag_hash: str
    tag_signature: str
    public_key: str
    challenge_id: str
    challenge_signature: str


@dataclass
class WithdrawalState:
    status: str
    request_id: str
    seq: int
    custodians_at_request: frozenset[str]
    deleted_by: set[str] = field(default_factory=set)


@dataclass
class TagLedgerEntry:
    hash: str
    signature: str = ""
    custodians: set[str] = field(default_factory=set)
    events: list[LedgerEvent] = field(default_factory=list)
    withdrawal: WithdrawalState | None = None
    # every party that ever held the tag, for poll filtering
    parties: set[str] = field(default_factory=set)

    @property
    def withdrawal_status(self) -> str:
        return self.withdrawal.status if self.withdrawal else "none"


@dataclass(frozen=True)
class WithdrawalOutcome:
    accepted: bool
    seq: int | None = None
    request_id: str | None = None
    reason: RejectReason | None = None
    duplicate: bool = False


@dataclass(frozen=True)
class RecordedCall:
    method: str
    args: tuple
    kwargs: dict


def _journaled(method):
    @wraps(method)
    def wrapper(self: "ConsentLedger", *args, **kwargs):
        with self._lock:
            self.calls.append(RecordedCall(method.__name__, args, dict(kwargs)))
            if self.latency:
                time.sleep(self.latency)
            return method(self, *args, **kwargs)

    return wrapper


class ConsentLedger:
    """
    Deterministic ledger state machine.

    Sequence numbers are global: tag registrations in a batch and journey events
    both draw from the same counter, so a transaction's range has no gaps.
    """

    def __init__(self, seed: int | None = None, latency: float = 0.0):
        self.seed = seed
        self.latency = latency
        self.calls: list[RecordedCall] = []
        self._lock = threading.RLock()
        self._seq = 0
        self._tx_count = 0
        self._request_count = 0
        self._entries: dict[str, TagLedgerEntry] = {}
        self._events: list[LedgerEvent] = []
        self._transactions: list[LedgerTransaction] = []
        self._agents: dict[str, CrawlerAgentConfig] = {}
        self._registry_version = 0
        self._challenges: dict[str, Challenge] = {}
        self._nonces = NonceSource(seed)

    # Agent configurations

    @_journaled
    def register_agent(self, config: CrawlerAgentConfig) -> int:
        if config.name in self._agents:
            logger.info(f"Replacing configuration of crawler {config.name}")
        self._agents[config.name] = config
        self._registry_version += 1
        return self._registry_version

    def agents(self) -> tuple[int, list[CrawlerAgentConfig]]:
        with self._lock:
            return self._registry_version, list(self._agents.values())

    # Consent logger

    @_journaled
    def submit_tag_batch(self, entries: list[TagSubmission]) -> LedgerTransaction:
        if not entries:
            raise EmptyBatchError("empty tag batch")
        if len(entries) > TX_CAPACITY:
            raise CapacityError(
                f"batch of {len(entries)} exceeds {TX_CAPACITY} entries per transaction"
            )
        for item in entries:
            try:
                Digest.from_hex(item.hash)
            except ValueError as exc:
                raise LedgerError(str(exc)) from exc

        first_seq = self._seq + 1
        for item in entries:
            self._seq += 1
            entry = self._entries.setdefault(item.hash, TagLedgerEntry(hash=item.hash))
            if not entry.signature:
                entry.signature = item.signature
            entry.custodians.add(item.custodian)
            entry.parties.add(item.custodian)
        self._tx_count += 1
        tx = LedgerTransaction(
            tx_id=f"tx-{self._tx_count:06d}",
            entries=tuple(entries),
            first_seq=first_seq,
            last_seq=self._seq,
        )
        self._transactions.append(tx)
        return tx

    @_journaled
    def append_event(self, tag_hash: str, kind: EventKind, actor: str, detail: str = "") -> int:
        kind = EventKind(kind)
        if kind not in JOURNEY_KINDS:
            raise LedgerError(f"{kind.value} events are recorded by the request handler only")
        try:
            Digest.from_hex(tag_hash)
        except ValueError as exc:
            raise LedgerError(str(exc)) from exc
        entry = self._entries.get(tag_hash)
        if entry is None:
            if kind is not EventKind.CRAWL:
                raise UnknownTagError(tag_hash)
            # crawls may race the server's batched tag upload
            entry = self._entries[tag_hash] = TagLedgerEntry(hash=tag_hash)
        if kind in CUSTODY_KINDS:
            entry.custodians.add(actor)
            entry.parties.add(actor)
        return self._append(entry, kind, actor, detail).seq

    def _append(self, entry: TagLedgerEntry, kind: EventKind, actor: str, detail: str) -> LedgerEvent:
        self._seq += 1
        event = LedgerEvent(self._seq, kind, actor, entry.hash, detail)
        entry.events.append(event)
        self._events.append(event)
        return event

    # Consent request handler

    @_journaled
    def issue_challenge(self) -> Challenge:
        challenge = Challenge(
            id=f"ch-{len(self._challenges) + 1:06d}",
            nonce=random_nonce(self._nonces),
            expiry=self._seq + CHALLENGE_TTL,
        )
        self._challenges[challenge.id] = challenge
        return Challenge(challenge.id, challenge.nonce, challenge.expiry)

    def challenge(self, challenge_id: str) -> Challenge | None:
        with self._lock:
            found = self._challenges.get(challenge_id)
            return None if found is None else Challenge(**asdict(found))

    @_journaled
    def submit_withdrawal(self, request: WithdrawalRequest) -> WithdrawalOutcome:
        entry = self._entries.get(request.tag_hash)
        if entry is None or not entry.signature:
            return WithdrawalOutcome(False, reason=RejectReason.UNKNOWN_TAG)

        digest = Digest.from_hex(entry.hash)
        if request.tag_signature != entry.signature or not verify_digest(
            request.public_key, digest, request.tag_signature
        ):
            return WithdrawalOutcome(False, reason=RejectReason.BAD_TAG_SIGNATURE)

        challenge = self._challenges.get(request.challenge_id)
        if challenge is None or challenge.consumed or self._seq > challenge.expiry:
            return WithdrawalOutcome(False, reason=RejectReason.CHALLENGE_EXPIRED_OR_CONSUMED)

        if not verify_digest(
            request.public_key, keccak256(challenge.nonce), request.challenge_signature
        ):
            return WithdrawalOutcome(False, reason=RejectReason.BAD_CHALLENGE_SIGNATURE)

        challenge.consumed = True
        if entry.withdrawal is not None:
            return WithdrawalOutcome(
                True,
                seq=entry.withdrawal.seq,
                request_id=entry.withdrawal.request_id,
                duplicate=True,
            )

        self._request_count += 1
        request_id = f"wr-{self._request_count:06d}"
        event = self._append(
            entry, EventKind.WITHDRAWAL_REQUESTED, REQUEST_HANDLER, f"request {request_id}"
        )
        entry.withdrawal = WithdrawalState(
            status="requested",
            request_id=request_id,
            seq=event.seq,
            custodians_at_request=frozenset(entry.custodians),
        )
        if not entry.custodians:
            entry.withdrawal.status = "completed"
        return WithdrawalOutcome(True, seq=event.seq, request_id=request_id)

    @_journaled
    def report_completion(self, tag_hash: str, custodian: str, action: CompletionAction) -> int:
        action = CompletionAction(action)
        entry = self._entries.get(tag_hash)
        if entry is None:
            raise UnknownTagError(tag_hash)
        if entry.withdrawal is None or entry.withdrawal.status != "requested":
            raise NoActiveWithdrawalError(f"no active withdrawal for {tag_hash}")
        if custodian not in entry.custodians:
            raise NotCustodianError(f"{custodian} is not a custodian of {tag_hash}")

        if action is CompletionAction.RETRAINING:
            return self._append(entry, EventKind.RETRAINING_COMPLETED, custodian, "").seq

        event = self._append(entry, EventKind.DELETION_COMPLETED, custodian, "")
        entry.custodians.discard(custodian)
        entry.withdrawal.deleted_by.add(custodian)
        if entry.withdrawal.custodians_at_request <= entry.withdrawal.deleted_by:
            entry.withdrawal.status = "completed"
            logger.info(f"Withdrawal {entry.withdrawal.request_id} completed for {tag_hash}")
        return event.seq

    # Queries

    def query_tag(self, tag_hash: str) -> TagLedgerEntry | None:
        with self._lock:
            entry = self._entries.get(tag_hash)
            if entry is None:
                return None
            withdrawal = None
            if entry.withdrawal is not None:
                withdrawal = WithdrawalState(
                    entry.withdrawal.status,
                    entry.withdrawal.request_id,
                    entry.withdrawal.seq,
                    entry.withdrawal.custodians_at_request,
                    set(entry.withdrawal.deleted_by),
                )
            return TagLedgerEntry(
                hash=entry.hash,
                signature=entry.signature,
                custodians=set(entry.custodians),
                events=list(entry.events),
                withdrawal=withdrawal,
                parties=set(entry.parties),
            )

    def poll_events(
        self, since: int = 0, party: str | None = None, tag_hash: str | None = None
    ) -> tuple[list[LedgerEvent], int]:
        """Events with seq > since matching the filters, plus the ledger high-water mark."""
        with self._lock:
            events = [event for event in self._events if event.seq > since]
            if tag_hash is not None:
                events = [event for event in events if event.tag_hash == tag_hash]
            if party is not None:
                events = [
                    event for event in events
                    if event.actor == party or party in self._entries[event.tag_hash].parties
                ]
            return events, self._seq

    @property
    def high_water(self) -> int:
        with self._lock:
            return self._seq

    def transactions(self) -> list[LedgerTransaction]:
        with self._lock:
            return list(self._transactions)

    def export_events(self) -> bytes:
        with self._lock:
            return orjson.dumps([asdict(event) for event in self._events], option=orjson.OPT_SORT_KEYS)

    @classmethod
    def replay(cls, calls: list[RecordedCall], seed: int | None = None) -> "ConsentLedger":
        """Rebuild a fresh ledger by re-issuing a recorded call sequence."""
        ledger = cls(seed=seed)
        for call in calls:
            try:
                getattr(ledger, call.method)(*call.args, **call.kwargs)
            except FishnetError:
                # failed calls were journaled too and fail the same way again
                pass
        return ledger


def event_to_dict(event: LedgerEvent) -> dict[str, Any]:
    return {
        "seq": event.seq,
        "kind": event.kind.value,
        "actor": event.actor,
        "tag_hash": event.tag_hash,
        "detail": event.detail,
    }
