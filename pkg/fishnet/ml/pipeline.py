"""
The machine learning side: ingest tagged datasets, keep the consent records
linked to the training data and act on withdrawal requests.
"""

import gzip
import logging
import os
import shlex
import subprocess
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import orjson

from fishnet.core.crypto import keccak256
from fishnet.core.exceptions import (
    LedgerError,
    LedgerTransportError,
    NoActiveWithdrawalError,
    NotCustodianError,
    UnknownTagError,
    UsageError,
)
from fishnet.crawler.dataset import DatasetRecord, iter_dataset_lines, read_dataset, write_dataset
from fishnet.ledger.client import LedgerClient
from fishnet.ledger.state import CompletionAction, EventKind, LedgerEvent
from fishnet.ml.stores import ConsentRecord, HeldDataset, MLStores, PendingCall, TrainingItem

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuarantinedRecord:
    line: int
    reason: str


@dataclass
class IngestSummary:
    dataset: str
    total: int = 0
    ingested: int = 0
    duplicates: int = 0
    skipped_masked: int = 0
    skipped_withdrawn: int = 0
    quarantined: list[QuarantinedRecord] = field(default_factory=list)
    transfer_events: int = 0
    training_events: int = 0
    queued: int = 0


@dataclass(frozen=True)
class CompletionReport:
    tag_hash: str
    held: bool
    removed_items: int = 0
    duplicate: bool = False
    reported: tuple[str, ...] = ()


@dataclass(frozen=True)
class TransferSummary:
    dest: Path
    recipient: str
    tags: int


def deduplicate(records: list[DatasetRecord]) -> list[DatasetRecord]:
    """First occurrence wins per (tag hash, content); order is kept."""
    seen: set[tuple[str | None, str]] = set()
    survivors = []
    for record in records:
        key = (record.consent_tag_hash, record.content)
        if key in seen:
            continue
        seen.add(key)
        survivors.append(record)
    return survivors


def _unique(values):
    return list(dict.fromkeys(values))


def _record_key(record: DatasetRecord) -> str:
    source = f"{record.url}\n{record.selector}\n{record.content}".encode("utf-8")
    return keccak256(source).hex[:16]


def _scrub_dataset(path: Path, tag_hash: str) -> int:
    if not path.exists():
        return 0
    records = read_dataset(path)
    kept = [record for record in records if record.consent_tag_hash != tag_hash]
    if len(kept) != len(records):
        write_dataset(kept, path)
    return len(records) - len(kept)


class MLParty:
    def __init__(
        self,
        party_id: str,
        stores: MLStores,
        ledger: LedgerClient,
        retrain_command: str = "",
        clock=time.time,
    ):
        self.party_id = party_id
        self.stores = stores
        self.ledger = ledger
        self.retrain_command = retrain_command
        self.clock = clock
        self._lock = threading.Lock()

    # Ledger calls with a durable retry queue

    def _call(self, call: PendingCall) -> None:
        if call.op == "event":
            self.ledger.append_event(call.tag_hash, EventKind(call.name), self.party_id, call.detail)
        else:
            self.ledger.report_completion(call.tag_hash, self.party_id, CompletionAction(call.name))

    def _submit(self, call: PendingCall) -> bool:
        """True when the ledger took the call now; False when it was queued."""
        if any(waiting.tag_hash == call.tag_hash for waiting in self.stores.pending):
            # calls for one tag reach the ledger in the order they were made
            self.stores.pending.append(call)
            return False
        try:
            self._call(call)
        except (LedgerTransportError, UnknownTagError) as exc:
            logger.warning(f"Queueing {call.op} {call.name} for {call.tag_hash}: {exc}")
            self.stores.pending.append(call)
            return False
        return True

    def flush_pending(self) -> int:
        """
        Retry queued calls in order. A transport failure stops the pass; a tag
        the ledger does not know yet parks that tag's calls without holding up
        the others.
        """
        delivered = 0
        parked: set[str] = set()
        remaining: list[PendingCall] = []
        queue = list(self.stores.pending)
        for index, call in enumerate(queue):
            if call.tag_hash in parked:
                remaining.append(call)
                continue
            try:
                self._call(call)
            except LedgerTransportError:
                remaining.extend(queue[index:])
                break
            except UnknownTagError:
                parked.add(call.tag_hash)
                remaining.append(call)
            except LedgerError as exc:
                logger.warning(f"Dropping {call.op} {call.name} for {call.tag_hash}: {exc}")
            else:
                delivered += 1
        if len(remaining) != len(queue):
            self.stores.pending = remaining
            self.stores.save()
        return delivered

    # Ingest

    def ingest_dataset(self, path: Path | str, keep_source: bool = True) -> IngestSummary:
        path = Path(path)
        summary = IngestSummary(dataset=path.name)
        parsed: list[tuple[int, DatasetRecord]] = []
        try:
            for number, line in iter_dataset_lines(path):
                summary.total += 1
                try:
                    parsed.append((number, DatasetRecord.from_dict(orjson.loads(line))))
                except (ValueError, TypeError) as exc:
                    summary.quarantined.append(QuarantinedRecord(number, f"malformed: {exc}"))
        except (OSError, EOFError, gzip.BadGzipFile) as exc:
            raise UsageError(f"cannot read dataset {path}: {exc}") from exc

        accepted: list[tuple[int, DatasetRecord]] = []
        for number, record in parsed:
            if record.masked:
                summary.skipped_masked += 1
                continue
            if record.tagged and keccak256(record.content.encode("utf-8")).hex != record.consent_tag_hash:
                summary.quarantined.append(QuarantinedRecord(number, "content does not match its tag hash"))
                continue
            accepted.append((number, record))

        with self._lock:
            withdrawn = self._withdrawn_tags({record.consent_tag_hash for _, record in accepted if record.tagged})
            if withdrawn:
                kept = [(number, record) for number, record in accepted if record.consent_tag_hash not in withdrawn]
                summary.skipped_withdrawn = len(accepted) - len(kept)
                accepted = kept

            unique = deduplicate([record for _, record in accepted])
            existing = self.stores.training.keys()
            records = [r for r in unique if (r.consent_tag_hash, r.content) not in existing]
            summary.duplicates = len(accepted) - len(records)

            tags = _unique(record.consent_tag_hash for record in records if record.tagged)
            held = self._take_custody(path, records, tags, keep_source)

            for tag_hash in tags:
                if self._submit(PendingCall("event", tag_hash, EventKind.TRANSFER.value, f"dataset {held.name}")):
                    summary.transfer_events += 1
                else:
                    summary.queued += 1

            now = self.clock()
            for record in records:
                record_id = f"{held.name}:{_record_key(record)}"
                self.stores.training.add(TrainingItem(record_id, record.content, record.consent_tag_hash))
                summary.ingested += 1
                if not record.tagged:
                    continue
                consent = self.stores.consent_records.setdefault(
                    record.consent_tag_hash,
                    ConsentRecord(record.consent_tag_hash, record.consent_tag_sig, ingest_time=now),
                )
                consent.record_ids.append(record_id)
                if self._submit(PendingCall("event", record.consent_tag_hash, EventKind.TRAINING.value, record_id)):
                    summary.training_events += 1
                else:
                    summary.queued += 1
            self.stores.save()

        for item in summary.quarantined:
            logger.warning(f"Quarantined line {item.line} of {path.name}: {item.reason}")
        logger.info(
            f"{self.party_id} ingested {summary.ingested}/{summary.total} records from {path.name}"
        )
        return summary

    def _withdrawn_tags(self, tags: set[str]) -> set[str]:
        withdrawn = tags & self.stores.handled
        for tag_hash in sorted(tags - withdrawn):
            try:
                entry = self.ledger.query_tag(tag_hash)
            except LedgerTransportError as exc:
                logger.warning(f"Cannot check withdrawal state of {tag_hash}: {exc}")
                continue
            if entry is not None and entry.withdrawal_status != "none":
                withdrawn.add(tag_hash)
        return withdrawn

    def _take_custody(self, path: Path, records: list[DatasetRecord], tags: list[str], keep_source: bool) -> Path:
        self.stores.datasets_dir.mkdir(parents=True, exist_ok=True)
        held = self.stores.datasets_dir / path.name
        previous = self.stores.held.get(str(held))
        if previous is not None and held.exists():
            # same dataset name ingested again: extend the copy in custody
            records = read_dataset(held) + records
            tags = _unique(previous.tag_hashes + tags)
        write_dataset(records, held)
        self.stores.held[str(held)] = HeldDataset(str(held), tags, source=str(path))
        if not keep_source and path.resolve() != held.resolve():
            os.unlink(path)
        return held

    def transfer_dataset(self, src: Path | str, dest: Path | str, recipient: str) -> TransferSummary:
        """Hand a held dataset to another party; every carried tag gains the recipient as custodian."""
        src, dest = Path(src), Path(dest)
        with self._lock:
            held = self.stores.held.get(str(src))
            if held is None:
                raise UsageError(f"{src} is not a dataset held by {self.party_id}")
            write_dataset(read_dataset(src), dest)
            for tag_hash in held.tag_hashes:
                self.ledger.append_event(tag_hash, EventKind.TRANSFER, recipient, f"from {self.party_id}")
        logger.info(f"Transferred {src.name} with {len(held.tag_hashes)} tags to {recipient}")
        return TransferSummary(dest, recipient, len(held.tag_hashes))

    # Withdrawal

    def _retrain(self, tag_hash: str) -> None:
        logger.info(f"retraining-started for {tag_hash} (training set v{self.stores.training.version})")
        if not self.retrain_command:
            return
        env = {**os.environ, "FISHNET_TAG_HASH": tag_hash, "FISHNET_PARTY_ID": self.party_id}
        result = subprocess.run(shlex.split(self.retrain_command), env=env, check=False)
        if result.returncode != 0:
            logger.warning(f"Retraining command exited with {result.returncode}")

    def handle_withdrawal_event(self, event: LedgerEvent) -> CompletionReport | None:
        if event.kind is not EventKind.WITHDRAWAL_REQUESTED:
            return None
        tag_hash = event.tag_hash
        with self._lock:
            if tag_hash in self.stores.handled:
                return CompletionReport(tag_hash, held=False, duplicate=True)
            if not self.stores.holds(tag_hash):
                self.stores.handled.add(tag_hash)
                self.stores.save()
                logger.info(f"{self.party_id} holds nothing for {tag_hash}")
                return CompletionReport(tag_hash, held=False)

            removed = self.stores.training.remove_tag(tag_hash)
            self.stores.consent_records.pop(tag_hash, None)
            for held in self.stores.held.values():
                if tag_hash in held.tag_hashes:
                    _scrub_dataset(Path(held.path), tag_hash)
                    held.tag_hashes.remove(tag_hash)
            self.stores.handled.add(tag_hash)
            self.stores.save()

            self._retrain(tag_hash)
            reported = []
            for action in (CompletionAction.RETRAINING, CompletionAction.DELETION):
                call = PendingCall("complete", tag_hash, action.value)
                try:
                    if self._submit(call):
                        reported.append(action.value)
                except (NotCustodianError, NoActiveWithdrawalError) as exc:
                    logger.warning(f"Ledger refused {action.value} for {tag_hash}: {exc}")
            self.stores.save()
        logger.info(f"{self.party_id} removed {removed} items for withdrawn {tag_hash}")
        return CompletionReport(tag_hash, held=True, removed_items=removed, reported=tuple(reported))

    def poll_once(self) -> list[CompletionReport]:
        self.flush_pending()
        events, high_water = self.ledger.poll_events(self.stores.cursor, party=self.party_id)
        reports = []
        for event in events:
            report = self.handle_withdrawal_event(event)
            if report is not None:
                reports.append(report)
        self.stores.cursor = high_water
        self.stores.save()
        return reports

    def watch(self, interval: float = 1.0, stop: threading.Event | None = None) -> None:
        stop = stop or threading.Event()
        logger.info(f"{self.party_id} watching the ledger every {interval}s")
        while not stop.is_set():
            try:
                self.poll_once()
            except LedgerTransportError as exc:
                logger.warning(f"Ledger unreachable: {exc}")
            stop.wait(interval)


def ingest_dataset(path: Path | str, party: MLParty, keep_source: bool = True) -> IngestSummary:
    return party.ingest_dataset(path, keep_source)


def handle_withdrawal_event(event: LedgerEvent, party: MLParty) -> CompletionReport | None:
    return party.handle_withdrawal_event(event)
