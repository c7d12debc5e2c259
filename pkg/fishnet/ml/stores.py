"""
Persistent state of a machine learning party, one JSON lines file per store.

    consent_records.jsonl   tag hash -> signature, dataset record ids, ingest time
    training_set.jsonl      training items
    held_datasets.jsonl     dataset copies in custody and the tags they carry
    pending_ledger.jsonl    ledger calls waiting for a retry
    state.json              training set version, ledger cursor, handled withdrawals
"""

import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import orjson

logger = logging.getLogger(__name__)


@dataclass
class ConsentRecord:
    hash: str
    signature: str
    record_ids: list[str] = field(default_factory=list)
    ingest_time: float = 0.0


@dataclass(frozen=True)
class TrainingItem:
    record_id: str
    content: str
    tag_hash: str | None = None


@dataclass
class TrainingSet:
    items: list[TrainingItem] = field(default_factory=list)
    version: int = 0

    def add(self, item: TrainingItem) -> None:
        self.items.append(item)
        self.version += 1

    def remove_tag(self, tag_hash: str) -> int:
        kept = [item for item in self.items if item.tag_hash != tag_hash]
        removed = len(self.items) - len(kept)
        if removed:
            self.items = kept
            self.version += 1
        return removed

    def keys(self) -> set[tuple[str | None, str]]:
        return {(item.tag_hash, item.content) for item in self.items}


@dataclass
class HeldDataset:
    path: str
    tag_hashes: list[str] = field(default_factory=list)
    source: str = ""


@dataclass(frozen=True)
class PendingCall:
    """A ledger call waiting for a retry; per tag, calls keep the order they were made in."""

    op: str  # "event" or "complete"
    tag_hash: str
    name: str  # event kind or completion action
    detail: str = ""


def _read_lines(path: Path) -> list[dict]:
    if not path.exists():
        return []
    with path.open("rb") as handle:
        return [orjson.loads(line) for line in handle if line.strip()]


def _write_atomic(path: Path, payload: bytes) -> None:
    partial = path.with_name(path.name + ".partial")
    partial.write_bytes(payload)
    os.replace(partial, path)


def _dump_lines(items) -> bytes:
    return b"".join(orjson.dumps(asdict(item)) + b"\n" for item in items)


class MLStores:
    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.consent_records: dict[str, ConsentRecord] = {}
        self.training = TrainingSet()
        self.held: dict[str, HeldDataset] = {}
        self.pending: list[PendingCall] = []
        self.cursor = 0
        self.handled: set[str] = set()

    @property
    def datasets_dir(self) -> Path:
        return self.root / "datasets"

    @classmethod
    def open(cls, root: Path | str) -> "MLStores":
        stores = cls(root)
        stores.load()
        return stores

    def load(self) -> None:
        self.consent_records = {
            item["hash"]: ConsentRecord(**item) for item in _read_lines(self.root / "consent_records.jsonl")
        }
        items = [TrainingItem(**item) for item in _read_lines(self.root / "training_set.jsonl")]
        self.held = {item["path"]: HeldDataset(**item) for item in _read_lines(self.root / "held_datasets.jsonl")}
        self.pending = [PendingCall(**item) for item in _read_lines(self.root / "pending_ledger.jsonl")]
        state_path = self.root / "state.json"
        state = orjson.loads(state_path.read_bytes()) if state_path.exists() else {}
        self.training = TrainingSet(items, state.get("version", 0))
        self.cursor = state.get("cursor", 0)
        self.handled = set(state.get("handled", []))

    def save(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        _write_atomic(self.root / "consent_records.jsonl", _dump_lines(self.consent_records.values()))
        _write_atomic(self.root / "training_set.jsonl", _dump_lines(self.training.items))
        _write_atomic(self.root / "held_datasets.jsonl", _dump_lines(self.held.values()))
        _write_atomic(self.root / "pending_ledger.jsonl", _dump_lines(self.pending))
        state = {
            "version": self.training.version,
            "cursor": self.cursor,
            "handled": sorted(self.handled),
        }
        _write_atomic(self.root / "state.json", orjson.dumps(state))

    def held_tags(self) -> set[str]:
        tags = set(self.consent_records)
        for dataset in self.held.values():
            tags.update(dataset.tag_hashes)
        return tags

    def holds(self, tag_hash: str) -> bool:
        return tag_hash in self.held_tags()

    def references(self, tag_hash: str) -> int:
        """Full scan count of every stored reference to a tag hash."""
        count = sum(1 for item in self.training.items if item.tag_hash == tag_hash)
        count += int(tag_hash in self.consent_records)
        count += sum(dataset.tag_hashes.count(tag_hash) for dataset in self.held.values())
        return count
