"""
Gzip-compressed JSON lines datasets. Field order is fixed and optional tag
fields are omitted rather than null-filled.
"""

import gzip
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import orjson

logger = logging.getLogger(__name__)

FIELD_ORDER = (
    "url",
    "selector",
    "content",
    "consent_tag_hash",
    "consent_tag_sig",
    "crawl_time",
    "crawler",
    "masked",
)


@dataclass(frozen=True)
class DatasetRecord:
    url: str
    selector: str
    content: str
    crawl_time: float
    crawler: str
    consent_tag_hash: str | None = None
    consent_tag_sig: str | None = None
    masked: bool = False

    def __post_init__(self):
        if (self.consent_tag_hash is None) != (self.consent_tag_sig is None):
            raise ValueError("consent tag fields must be both present or both absent")

    @property
    def tagged(self) -> bool:
        return self.consent_tag_hash is not None

    def to_dict(self) -> dict:
        payload = {}
        for name in FIELD_ORDER:
            value = getattr(self, name)
            if value is not None:
                payload[name] = value
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "DatasetRecord":
        unknown = set(payload) - set(FIELD_ORDER)
        if unknown:
            raise ValueError(f"unknown dataset fields {sorted(unknown)}")
        return cls(**payload)


@dataclass(frozen=True)
class DatasetSummary:
    path: Path
    count: int
    bytes: int


def write_dataset(records: Iterable[DatasetRecord], path: Path | str) -> DatasetSummary:
    """Write atomically: the destination only ever holds a complete archive."""
    path = Path(path)
    partial = path.with_name(path.name + ".partial")
    count = 0
    try:
        with open(partial, "wb") as raw, gzip.GzipFile(filename="", fileobj=raw, mode="wb", mtime=0) as handle:
            for record in records:
                handle.write(orjson.dumps(record.to_dict()) + b"\n")
                count += 1
        os.replace(partial, path)
    except BaseException:
        partial.unlink(missing_ok=True)
        raise
    size = path.stat().st_size
    logger.info(f"Wrote {count} records ({size} bytes) to {path}")
    return DatasetSummary(path, count, size)


def read_dataset(path: Path | str) -> list[DatasetRecord]:
    with gzip.open(path, "rb") as handle:
        return [DatasetRecord.from_dict(orjson.loads(line)) for line in handle if line.strip()]


def iter_dataset_lines(path: Path | str) -> Iterable[tuple[int, bytes]]:
    with gzip.open(path, "rb") as handle:
        for number, line in enumerate(handle, start=1):
            if line.strip():
                yield number, line
