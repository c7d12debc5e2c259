import logging
import threading
from dataclasses import asdict, dataclass, field
from pathlib import Path

import orjson
from pydantic import TypeAdapter, ValidationError

logger = logging.getLogger(__name__)

RECORD_FIELDS = ("hash", "sig", "pubkey", "consent_config", "url", "method", "ts")


@dataclass(frozen=True)
class LocalConsentRecord:
    hash: str
    sig: str
    pubkey: str
    consent_config: str
    url: str
    method: str
    ts: float

    @classmethod
    def from_json(cls, line: bytes) -> "LocalConsentRecord":
        payload = orjson.loads(line)
        if not isinstance(payload, dict) or set(payload) != set(RECORD_FIELDS):
            raise ValueError("record fields do not match")
        return _RECORD.validate_python(payload)

    def to_json(self) -> bytes:
        return orjson.dumps(asdict(self))


_RECORD = TypeAdapter(LocalConsentRecord)


@dataclass
class RecordScan:
    records: list[LocalConsentRecord] = field(default_factory=list)
    skipped: int = 0


class RecordStore:
    """Append-only JSON lines file. Appends are serialized; readers never block writers for long."""

    def __init__(self, path: Path | str):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, record: LocalConsentRecord) -> None:
        line = record.to_json() + b"\n"
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("ab") as handle:
                handle.write(line)

    def scan(
        self,
        url_contains: str | None = None,
        since: float | None = None,
        until: float | None = None,
    ) -> RecordScan:
        """Matching records, newest first. Corrupt lines are counted, not fatal."""
        scan = RecordScan()
        if not self.path.exists():
            return scan
        seen: set[tuple[str, str, float]] = set()
        with self.path.open("rb") as handle:
            for number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    record = LocalConsentRecord.from_json(line)
                except (ValidationError, ValueError, TypeError):
                    scan.skipped += 1
                    logger.warning(f"Skipping corrupt record on line {number} of {self.path}")
                    continue
                key = (record.hash, record.url, record.ts)
                if key in seen:
                    continue
                seen.add(key)
                if url_contains is not None and url_contains not in record.url:
                    continue
                if since is not None and record.ts < since:
                    continue
                if until is not None and record.ts > until:
                    continue
                scan.records.append(record)
        scan.records.sort(key=lambda record: record.ts, reverse=True)
        return scan

    def find(self, tag_hash: str) -> LocalConsentRecord | None:
        for record in self.scan().records:
            if record.hash == tag_hash:
                return record
        return None


def list_local_records(
    store: RecordStore,
    url_contains: str | None = None,
    since: float | None = None,
    until: float | None = None,
) -> RecordScan:
    return store.scan(url_contains, since, until)
