"""
Background worker keeping the server and the ledger in step: registry pulls,
bulk tag uploads, crawl-event delivery and withdrawal handling.
"""

import asyncio
import logging
from dataclasses import dataclass

from sqlalchemy.ext.asyncio import AsyncSession, async_sessionmaker
from starlette.concurrency import run_in_threadpool

from fishnet.core.exceptions import (
    LedgerError,
    LedgerTransportError,
    NoActiveWithdrawalError,
    NotCustodianError,
    UnknownTagError,
)
from fishnet.crud.crawl_event import (
    get_pending_crawl_events,
    mark_crawl_event_delivered,
    record_crawl_event_failure,
)
from fishnet.crud.data import (
    delete_data_by_tag_hash,
    get_pending_consent_entries,
    mark_consent_entries_uploaded,
)
from fishnet.crud.sync_state import get_sync_value, set_sync_value
from fishnet.ledger.state import TX_CAPACITY, CompletionAction, EventKind, TagSubmission
from fishnet.server.state import ServerState

logger = logging.getLogger(__name__)

WITHDRAWAL_CURSOR = "withdrawal_cursor"


@dataclass
class SyncReport:
    tags_uploaded: int = 0
    events_published: int = 0
    withdrawals_applied: int = 0
    registry_version: int = 0


class LedgerSync:
    def __init__(
        self,
        state: ServerState,
        sessionmaker: async_sessionmaker[AsyncSession],
        chunk_size: int = TX_CAPACITY,
    ):
        if not 1 <= chunk_size <= TX_CAPACITY:
            raise ValueError(f"chunk size must be within 1..{TX_CAPACITY}")
        self.state = state
        self.sessionmaker = sessionmaker
        self.chunk_size = chunk_size
        self._lock = asyncio.Lock()

    @property
    def party(self) -> str:
        return self.state.settings.PARTY_ID

    async def refresh_registry(self) -> int:
        version, agents = await run_in_threadpool(self.state.ledger.agents)
        if version != self.state.registry_version:
            logger.info(f"Crawler registry now at version {version} ({len(agents)} agents)")
        self.state.set_registry(version, agents)
        return version

    async def upload_tags(self) -> int:
        uploaded = 0
        while True:
            async with self.sessionmaker() as db:
                entries = await get_pending_consent_entries(db, self.chunk_size)
                if not entries:
                    break
                batch = [TagSubmission(entry.hash, entry.signature, self.party) for entry in entries]
                tx_id, first_seq, last_seq = await run_in_threadpool(
                    self.state.ledger.submit_tag_batch, batch
                )
                await mark_consent_entries_uploaded(db, [entry.id for entry in entries])
                await db.commit()
            logger.info(f"Uploaded {len(batch)} consent tags in {tx_id} (seq {first_seq}-{last_seq})")
            uploaded += len(batch)
        return uploaded

    async def publish_crawl_events(self) -> int:
        published = 0
        async with self.sessionmaker() as db:
            for event in await get_pending_crawl_events(db):
                try:
                    await run_in_threadpool(
                        self.state.ledger.append_event,
                        event.tag_hash,
                        EventKind.CRAWL,
                        event.crawler,
                        f"served by {self.party}",
                    )
                except LedgerTransportError as exc:
                    await record_crawl_event_failure(db, event.id, str(exc))
                    logger.warning(f"Ledger unreachable, {event.tag_hash} stays queued")
                    break
                except LedgerError as exc:
                    await record_crawl_event_failure(db, event.id, str(exc))
                    logger.warning(f"Ledger refused crawl event for {event.tag_hash}: {exc}")
                    continue
                await mark_crawl_event_delivered(db, event.id)
                published += 1
            await db.commit()
        return published

    async def apply_withdrawals(self) -> int:
        applied = 0
        async with self.sessionmaker() as db:
            cursor = int(await get_sync_value(db, WITHDRAWAL_CURSOR, "0"))
            events, high_water = await run_in_threadpool(
                self.state.ledger.poll_events, cursor, self.party
            )
            for event in events:
                if event.kind is not EventKind.WITHDRAWAL_REQUESTED:
                    continue
                removed = await delete_data_by_tag_hash(db, event.tag_hash)
                await db.commit()
                if removed:
                    self.state.store_changed()
                try:
                    await run_in_threadpool(
                        self.state.ledger.report_completion,
                        event.tag_hash,
                        self.party,
                        CompletionAction.DELETION,
                    )
                except (NotCustodianError, NoActiveWithdrawalError, UnknownTagError):
                    logger.info(f"Deletion of {event.tag_hash} already settled")
                logger.info(f"Withdrawal applied for {event.tag_hash}: {removed} data removed")
                applied += 1
            await set_sync_value(db, WITHDRAWAL_CURSOR, str(high_water))
            await db.commit()
        return applied

    async def run_once(self) -> SyncReport:
        report = SyncReport(registry_version=self.state.registry_version)
        async with self._lock:
            try:
                report.registry_version = await self.refresh_registry()
                report.tags_uploaded = await self.upload_tags()
                report.events_published = await self.publish_crawl_events()
                report.withdrawals_applied = await self.apply_withdrawals()
            except (LedgerTransportError, LedgerError) as exc:
                logger.warning(f"Ledger sync interrupted: {exc}")
        return report

    async def run_forever(self, interval: float) -> None:
        while True:
            await self.run_once()
            await asyncio.sleep(interval)
