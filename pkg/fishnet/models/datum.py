from uuid import UUID

from sqlalchemy import Boolean, String, Text, Uuid
from sqlalchemy.orm import Mapped, mapped_column

from fishnet.core.db import Base
from fishnet.models.mixin import SharedMixin


class Datum(Base, SharedMixin):
    __tablename__ = "data"

    content: Mapped[str] = mapped_column(Text, nullable=False)
    author: Mapped[str] = mapped_column(String(255), nullable=False)
    # set after the consent entry is saved, never for non-crawlable data
    consent_id: Mapped[UUID | None] = mapped_column(Uuid, nullable=True)
    non_crawlable: Mapped[bool] = mapped_column(Boolean, default=False)
