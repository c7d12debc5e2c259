from fastapi import APIRouter, Depends, Request
from fastapi.responses import PlainTextResponse
from sqlalchemy.ext.asyncio import AsyncSession

from fishnet.api.deps import get_server_state, get_session
from fishnet.crud.crawl_event import count_pending_crawl_events
from fishnet.crud.data import count_pending_consent_entries
from fishnet.schemas.datum import HealthOut, SyncReportOut
from fishnet.server.robots import serve_robots
from fishnet.server.state import ServerState

router = APIRouter()


@router.get("/robots.txt", response_class=PlainTextResponse)
async def robots_txt(state: ServerState = Depends(get_server_state)):
    return PlainTextResponse(serve_robots(state.site_policy))


@router.get("/health", response_model=HealthOut)
async def health(
    db: AsyncSession = Depends(get_session),
    state: ServerState = Depends(get_server_state),
):
    return {
        "status": "ok",
        "pending_tags": await count_pending_consent_entries(db),
        "pending_events": await count_pending_crawl_events(db),
        "registry_version": state.registry_version,
    }


@router.post("/ledger-sync", response_model=SyncReportOut)
async def ledger_sync(request: Request):
    report = await request.app.state.sync.run_once()
    return vars(report)
