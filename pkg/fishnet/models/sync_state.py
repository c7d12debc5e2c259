from sqlalchemy import String
from sqlalchemy.orm import Mapped, mapped_column

from fishnet.core.db import Base


class SyncState(Base):
    __tablename__ = "sync_state"

    key: Mapped[str] = mapped_column(String(64), primary_key=True)
    value: Mapped[str] = mapped_column(String(255), nullable=False)
