from fastapi import APIRouter, Depends, Query

from fishnet.api import http_except
from fishnet.api.deps import get_ledger
from fishnet.core.exceptions import LedgerError, UnknownTagError
from fishnet.ledger.state import ConsentLedger
from fishnet.schemas.ledger import EventIn, EventsPage, SeqOut

router = APIRouter()


@router.post("", response_model=SeqOut)
def append_event(event: EventIn, ledger: ConsentLedger = Depends(get_ledger)):
    try:
        seq = ledger.append_event(event.tag_hash, event.kind, event.actor, event.detail)
    except UnknownTagError:
        raise http_except.unknown_tag
    except LedgerError as exc:
        raise http_except.ledger_rejected(str(exc))
    return {"seq": seq}


@router.get("", response_model=EventsPage)
def poll_events(
    since: int = Query(0, ge=0),
    party: str | None = Query(None),
    tag: str | None = Query(None),
    ledger: ConsentLedger = Depends(get_ledger),
):
    events, high_water = ledger.poll_events(since, party=party, tag_hash=tag)
    return {"events": events, "high_water": high_water}
