from sqlalchemy import select
from sqlalchemy.ext.asyncio import AsyncSession

from fishnet.models.sync_state import SyncState


async def get_sync_value(db: AsyncSession, key: str, default: str | None = None) -> str | None:
    result = await db.execute(select(SyncState).where(SyncState.key == key))
    state = result.scalar()
    return state.value if state else default


async def set_sync_value(db: AsyncSession, key: str, value: str) -> None:
    result = await db.execute(select(SyncState).where(SyncState.key == key))
    state = result.scalar()
    if state is None:
        db.add(SyncState(key=key, value=value))
    else:
        state.value = value
    await db.flush()
