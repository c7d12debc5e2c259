from uuid import UUID

from pydantic import BaseModel


class SubmissionOut(BaseModel):
    data_id: UUID
    consent_id: UUID | None = None
    non_crawlable: bool = False


class PostItem(BaseModel):
    content: str
    masked: bool | None = None
    consent_tag_hash: str | None = None
    consent_tag_sig: str | None = None


class SyncReportOut(BaseModel):
    tags_uploaded: int
    events_published: int
    withdrawals_applied: int
    registry_version: int


class HealthOut(BaseModel):
    status: str
    pending_tags: int
    pending_events: int
    registry_version: int
