from datetime import datetime, timezone
from uuid import UUID, uuid4

from sqlalchemy import DateTime
from sqlalchemy.orm import Mapped, mapped_column


def utcnow() -> datetime:
    # naive UTC, which is what SQLite hands back
    return datetime.now(timezone.utc).replace(tzinfo=None)


class SharedMixin:
    id: Mapped[UUID] = mapped_column(primary_key=True, default=uuid4)
    time_created: Mapped[datetime] = mapped_column(DateTime, default=utcnow, nullable=True)
    time_updated: Mapped[datetime] = mapped_column(DateTime, onupdate=utcnow, nullable=True)
