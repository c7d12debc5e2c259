from fastapi import APIRouter, Depends

from fishnet.api import http_except
from fishnet.api.deps import get_ledger
from fishnet.core.exceptions import CapacityError, EmptyBatchError, LedgerError
from fishnet.ledger.state import ConsentLedger, TagSubmission
from fishnet.schemas.ledger import TagBatchIn, TagEntryOut, TransactionReceipt

router = APIRouter()


@router.post("/batch", response_model=TransactionReceipt)
def submit_tag_batch(batch: TagBatchIn, ledger: ConsentLedger = Depends(get_ledger)):
    entries = [TagSubmission(item.hash, item.sig, item.custodian) for item in batch.entries]
    try:
        tx = ledger.submit_tag_batch(entries)
    except EmptyBatchError:
        raise http_except.empty_batch
    except CapacityError:
        raise http_except.ledger_capacity
    except LedgerError as exc:
        raise http_except.ledger_rejected(str(exc))
    return {
        "tx_id": tx.tx_id,
        "count": len(tx.entries),
        "first_seq": tx.first_seq,
        "last_seq": tx.last_seq,
    }


@router.get("/{tag_hash}", response_model=TagEntryOut)
def query_tag(tag_hash: str, ledger: ConsentLedger = Depends(get_ledger)):
    entry = ledger.query_tag(tag_hash)
    if entry is None:
        raise http_except.unknown_tag
    return {
        "hash": entry.hash,
        "signature": entry.signature,
        "custodians": sorted(entry.custodians),
        "events": entry.events,
        "withdrawal": entry.withdrawal_status,
        "withdrawal_request_id": entry.withdrawal.request_id if entry.withdrawal else None,
    }
