"""
Query processing for the posts views: load, filter by consent, render.
Results are cached per (view, visitor, store version) when the cache is on.
"""

from typing import Any, Callable

from sqlalchemy.ext.asyncio import AsyncSession

from fishnet.core.consent import ConsentTag, parse_consent_config
from fishnet.crud.data import list_data, list_data_with_consent
from fishnet.schemas.datum import PostItem
from fishnet.server.processor import ServedPage, StoredPost, apply_consent
from fishnet.server.render import render_tagged_html
from fishnet.server.state import ServerState
from fishnet.server.visitor import VisitorClass, VisitorKind


async def load_posts(db: AsyncSession, with_consent: bool = True) -> list[StoredPost]:
    if not with_consent:
        return [
            StoredPost(datum.id, datum.content, datum.non_crawlable) for datum in await list_data(db)
        ]
    posts = []
    for datum, entry in await list_data_with_consent(db):
        tag = config = None
        if entry is not None:
            tag = ConsentTag(entry.hash, entry.signature)
            config = parse_consent_config(entry.config)
        posts.append(StoredPost(datum.id, datum.content, datum.non_crawlable, tag, config))
    return posts


def render_html(page: ServedPage) -> str:
    return render_tagged_html(page.items)


def to_payload(page: ServedPage) -> dict:
    items = []
    for item in page.items:
        payload = PostItem(content=item.content)
        if item.masked:
            payload.masked = True
        elif item.tag is not None:
            payload.consent_tag_hash = item.tag.hash
            payload.consent_tag_sig = item.tag.signature
        items.append(payload)
    metadata = {
        "total_elements": len(items),
        "masked": sum(bool(item.masked) for item in items),
        "tagged": sum(item.consent_tag_hash is not None for item in items),
    }
    return {"data": items, "metadata": metadata}


async def serve_page(
    db: AsyncSession,
    state: ServerState,
    visitor: VisitorClass,
    view: str,
    render: Callable[[ServedPage], Any],
) -> tuple[ServedPage, Any]:
    key = (view, visitor.kind, visitor.name, state.store_version)
    cached = state.cache.get(key)
    if cached is None:
        posts = await load_posts(db, with_consent=visitor.kind is not VisitorKind.REGULAR)
        page = apply_consent(posts, visitor)
        cached = (page, render(page))
        state.cache.put(key, cached)
    return cached
