from uuid import UUID

from sqlalchemy import Boolean, Integer, String, Text, Uuid
from sqlalchemy.orm import Mapped, mapped_column

from fishnet.core.db import Base
from fishnet.models.mixin import SharedMixin


class CrawlEvent(Base, SharedMixin):
    """Durable queue of crawl events awaiting delivery to the ledger."""

    __tablename__ = "crawl_events"

    tag_hash: Mapped[str] = mapped_column(String(64), nullable=False)
    crawler: Mapped[str] = mapped_column(String(255), nullable=False)
    data_id: Mapped[UUID] = mapped_column(Uuid, nullable=False)
    delivered: Mapped[bool] = mapped_column(Boolean, default=False, index=True)
    attempts: Mapped[int] = mapped_column(Integer, default=0)
    last_error: Mapped[str | None] = mapped_column(Text, nullable=True)
