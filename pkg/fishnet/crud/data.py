from typing import List, Tuple
from uuid import UUID

from sqlalchemy import delete, func, select, update
from sqlalchemy.ext.asyncio import AsyncSession

from fishnet.core.consent import ConsentConfig, ConsentTag, serialize_consent_config
from fishnet.models.consent_entry import ConsentEntry
from fishnet.models.crawl_event import CrawlEvent
from fishnet.models.datum import Datum


async def create_datum(
    db: AsyncSession,
    content: str,
    author: str,
    non_crawlable: bool = False,
    tag: ConsentTag | None = None,
    config: ConsentConfig | None = None,
) -> Tuple[Datum, ConsentEntry | None]:
    """
    Persist a datum and, when it arrived tagged, its consent entry.

    Both rows are flushed in the caller's transaction, so the datum and the
    consent link commit together or not at all.
    """
    datum = Datum(content=content, author=author, non_crawlable=non_crawlable)
    db.add(datum)
    await db.flush()

    entry = None
    if tag is not None:
        entry = ConsentEntry(
            data_id=datum.id,
            hash=tag.hash,
            signature=tag.signature,
            config=serialize_consent_config(config or ConsentConfig()),
        )
        db.add(entry)
        await db.flush()
        datum.consent_id = entry.id
        await db.flush()
    return datum, entry


async def list_data_with_consent(db: AsyncSession) -> List[Tuple[Datum, ConsentEntry | None]]:
    query = (
        select(Datum, ConsentEntry)
        .outerjoin(ConsentEntry, ConsentEntry.data_id == Datum.id)
        .order_by(Datum.time_created, Datum.id)
    )
    result = await db.execute(query)
    return [(datum, entry) for datum, entry in result.all()]


async def get_pending_consent_entries(db: AsyncSession, limit: int) -> List[ConsentEntry]:
    query = (
        select(ConsentEntry)
        .where(ConsentEntry.uploaded.is_(False))
        .order_by(ConsentEntry.time_created, ConsentEntry.id)
        .limit(limit)
    )
    result = await db.execute(query)
    return result.scalars().all()


async def count_pending_consent_entries(db: AsyncSession) -> int:
    result = await db.execute(
        select(func.count()).select_from(ConsentEntry).where(ConsentEntry.uploaded.is_(False))
    )
    return result.scalar_one()


async def mark_consent_entries_uploaded(db: AsyncSession, entry_ids: List[UUID]) -> None:
    if entry_ids:
        await db.execute(
            update(ConsentEntry).where(ConsentEntry.id.in_(entry_ids)).values(uploaded=True)
        )


async def delete_data_by_tag_hash(db: AsyncSession, tag_hash: str) -> int:
    """Remove every datum linked to the tag, with its consent entry and queued crawl events."""
    result = await db.execute(select(ConsentEntry).where(ConsentEntry.hash == tag_hash))
    entries = result.scalars().all()
    data_ids = [entry.data_id for entry in entries]
    if not data_ids:
        return 0
    await db.execute(delete(ConsentEntry).where(ConsentEntry.hash == tag_hash))
    await db.execute(
        delete(CrawlEvent).where(CrawlEvent.tag_hash == tag_hash, CrawlEvent.delivered.is_(False))
    )
    await db.execute(delete(Datum).where(Datum.id.in_(data_ids)))
    return len(data_ids)


async def find_tag_hashes(db: AsyncSession) -> List[str]:
    result = await db.execute(select(ConsentEntry.hash).distinct())
    return result.scalars().all()


async def list_data(db: AsyncSession) -> List[Datum]:
    result = await db.execute(select(Datum).order_by(Datum.time_created, Datum.id))
    return result.scalars().all()
