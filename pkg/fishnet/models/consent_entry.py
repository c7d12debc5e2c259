from uuid import UUID

from sqlalchemy import Boolean, ForeignKey, String, Text
from sqlalchemy.orm import Mapped, mapped_column

from fishnet.core.db import Base
from fishnet.models.mixin import SharedMixin


class ConsentEntry(Base, SharedMixin):
    __tablename__ = "consent_entries"

    data_id: Mapped[UUID] = mapped_column(
        ForeignKey("data.id", ondelete="CASCADE"), unique=True, nullable=False
    )
    hash: Mapped[str] = mapped_column(String(64), index=True, nullable=False)
    signature: Mapped[str] = mapped_column(Text, nullable=False)
    config: Mapped[str] = mapped_column(Text, nullable=False)
    uploaded: Mapped[bool] = mapped_column(Boolean, default=False, index=True)
