from typing import Iterable, List, Tuple
from uuid import UUID

from sqlalchemy import func, select, update
from sqlalchemy.ext.asyncio import AsyncSession

from fishnet.models.crawl_event import CrawlEvent


async def enqueue_crawl_events(
    db: AsyncSession, crawler: str, events: Iterable[Tuple[UUID, str]]
) -> int:
    count = 0
    for data_id, tag_hash in events:
        db.add(CrawlEvent(tag_hash=tag_hash, crawler=crawler, data_id=data_id))
        count += 1
    await db.flush()
    return count


async def get_pending_crawl_events(db: AsyncSession, limit: int = 500) -> List[CrawlEvent]:
    query = (
        select(CrawlEvent)
        .where(CrawlEvent.delivered.is_(False))
        .order_by(CrawlEvent.time_created, CrawlEvent.id)
        .limit(limit)
    )
    result = await db.execute(query)
    return result.scalars().all()


async def count_pending_crawl_events(db: AsyncSession) -> int:
    result = await db.execute(
        select(func.count()).select_from(CrawlEvent).where(CrawlEvent.delivered.is_(False))
    )
    return result.scalar_one()


async def mark_crawl_event_delivered(db: AsyncSession, event_id: UUID) -> None:
    await db.execute(
        update(CrawlEvent)
        .where(CrawlEvent.id == event_id)
        .values(delivered=True, attempts=CrawlEvent.attempts + 1, last_error=None)
    )


async def record_crawl_event_failure(db: AsyncSession, event_id: UUID, error: str) -> None:
    await db.execute(
        update(CrawlEvent)
        .where(CrawlEvent.id == event_id)
        .values(attempts=CrawlEvent.attempts + 1, last_error=error)
    )
