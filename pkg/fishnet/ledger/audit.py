from dataclasses import dataclass
from typing import Iterable, Mapping

from fishnet.ledger.client import LedgerClient


@dataclass(frozen=True)
class CustodianMismatch:
    tag_hash: str
    on_ledger: frozenset[str]
    holding: frozenset[str]


def audit_custodians(
    ledger: LedgerClient,
    holders: Mapping[str, Iterable[str]],
    tags: Iterable[str] = (),
) -> list[CustodianMismatch]:
    """
    Compare each tag's ledger custodians with the parties that actually hold
    it. ``holders`` maps party id to the tag hashes found in its stores.
    """
    holdings = {party: set(hashes) for party, hashes in holders.items()}
    every_tag = set(tags).union(*holdings.values()) if holdings else set(tags)

    mismatches = []
    for tag_hash in sorted(every_tag):
        entry = ledger.query_tag(tag_hash)
        on_ledger = frozenset(entry.custodians if entry else ())
        holding = frozenset(party for party, hashes in holdings.items() if tag_hash in hashes)
        if on_ledger != holding:
            mismatches.append(CustodianMismatch(tag_hash, on_ledger, holding))
    return mismatches
