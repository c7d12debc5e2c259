"""
User-facing consent management: journey tracking and withdrawal.
"""

import logging
from dataclasses import dataclass, field

from fishnet.client.keystore import Keystore
from fishnet.client.records import RecordStore
from fishnet.core.crypto import KeyPair, keccak256, sign_digest
from fishnet.core.exceptions import TaggingError, UnknownTagError, WithdrawalRejected
from fishnet.ledger.client import LedgerClient
from fishnet.ledger.state import LedgerEvent, WithdrawalRequest

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class JourneyReport:
    tag_hash: str
    events: list[LedgerEvent] = field(default_factory=list)
    withdrawal: str = "none"
    custodians: list[str] = field(default_factory=list)

    @property
    def kinds(self) -> list[str]:
        return [event.kind.value for event in self.events]


@dataclass(frozen=True)
class WithdrawalReceipt:
    tag_hash: str
    request_id: str
    seq: int
    duplicate: bool = False


def track_journey(store: RecordStore, tag_hash: str, ledger: LedgerClient) -> JourneyReport:
    if store.find(tag_hash) is None:
        raise UnknownTagError(tag_hash)
    entry = ledger.query_tag(tag_hash)
    if entry is None:
        return JourneyReport(tag_hash)
    return JourneyReport(
        tag_hash=tag_hash,
        events=sorted(entry.events, key=lambda event: event.seq),
        withdrawal=entry.withdrawal_status,
        custodians=sorted(entry.custodians),
    )


def request_withdrawal(
    store: RecordStore,
    tag_hash: str,
    ledger: LedgerClient,
    keystore: Keystore | None = None,
    keypair: KeyPair | None = None,
) -> WithdrawalReceipt:
    """
    Prove ownership of the tag with a signed ledger challenge and ask every
    custodian to delete the data. ``keypair`` overrides the keystore lookup.
    """
    record = store.find(tag_hash)
    if record is None:
        raise UnknownTagError(tag_hash)
    if keypair is None:
        keypair = keystore.find_by_public(record.pubkey) if keystore is not None else None
    if keypair is None:
        raise TaggingError(f"the key that tagged {tag_hash} is not in the keystore")

    challenge = ledger.issue_challenge()
    challenge_sig = sign_digest(keypair.private_key, keccak256(challenge.nonce))
    outcome = ledger.submit_withdrawal(
        WithdrawalRequest(
            tag_hash=record.hash,
            tag_signature=record.sig,
            public_key=keypair.public_hex,
            challenge_id=challenge.id,
            challenge_signature=challenge_sig.hex(),
        )
    )
    if not outcome.accepted:
        raise WithdrawalRejected(outcome.reason.value)
    logger.info(f"Withdrawal {outcome.request_id} accepted for {tag_hash} at seq {outcome.seq}")
    return WithdrawalReceipt(tag_hash, outcome.request_id, outcome.seq, outcome.duplicate)
