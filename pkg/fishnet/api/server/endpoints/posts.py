from fastapi import APIRouter, Depends, Request, Response
from fastapi.responses import HTMLResponse
from sqlalchemy.ext.asyncio import AsyncSession

from fishnet.api.deps import get_client_ip, get_server_state, get_session
from fishnet.core.consent import CRAWLER_SIG_HEADER, CRAWLER_TIMESTAMP_HEADER
from fishnet.crud.crawl_event import enqueue_crawl_events
from fishnet.schemas.datum import PostItem
from fishnet.schemas.paging import Page
from fishnet.server.processor import ServedPage
from fishnet.server.query import render_html, serve_page, to_payload
from fishnet.server.state import ServerState
from fishnet.server.visitor import VisitorClass, VisitorKind, identify_visitor

router = APIRouter()


def classify(request: Request, client_ip: str, state: ServerState) -> VisitorClass:
    return identify_visitor(
        request.headers.get("user-agent", ""),
        client_ip,
        state.agents,
        timestamp=request.headers.get(CRAWLER_TIMESTAMP_HEADER),
        signature=request.headers.get(CRAWLER_SIG_HEADER),
        freshness=state.settings.CRAWLER_FRESHNESS,
    )


async def log_crawl(db: AsyncSession, visitor: VisitorClass, page: ServedPage) -> None:
    # delivered to the ledger by the sync worker
    if page.crawl_events:
        await enqueue_crawl_events(db, visitor.name, page.crawl_events)


@router.get("/posts", response_class=HTMLResponse)
async def read_posts_html(
    request: Request,
    client_ip: str = Depends(get_client_ip),
    db: AsyncSession = Depends(get_session),
    state: ServerState = Depends(get_server_state),
):
    visitor = classify(request, client_ip, state)
    if visitor.kind is VisitorKind.REJECTED:
        return Response(status_code=403)
    page, html = await serve_page(db, state, visitor, "html", render_html)
    await log_crawl(db, visitor, page)
    return HTMLResponse(html)


@router.get(
    "/api/posts",
    response_model=Page[PostItem],
    response_model_exclude_none=True,
)
async def read_posts_api(
    request: Request,
    client_ip: str = Depends(get_client_ip),
    db: AsyncSession = Depends(get_session),
    state: ServerState = Depends(get_server_state),
):
    visitor = classify(request, client_ip, state)
    if visitor.kind is VisitorKind.REJECTED:
        return Response(status_code=403)
    page, payload = await serve_page(db, state, visitor, "api", to_payload)
    await log_crawl(db, visitor, page)
    return payload
