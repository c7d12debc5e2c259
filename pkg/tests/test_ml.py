import gzip

import orjson
import pytest

from fishnet.core.consent import TAG_HASH_HEADER
from fishnet.core.crypto import KeyPair, keccak256, sign_digest
from fishnet.core.exceptions import LedgerTransportError, UsageError
from fishnet.crawler.dataset import DatasetRecord, read_dataset, write_dataset
from fishnet.crawler.spider import CrawlSettings, crawl_site
from fishnet.ledger.client import LocalLedgerClient
from fishnet.ledger.state import EventKind, LedgerEvent, TagSubmission
from fishnet.ml.pipeline import MLParty, deduplicate
from fishnet.ml.stores import MLStores
from tests.conftest import tagged_headers, withdraw

PARTY = "ml-corp"


def tagged_record(content: str, keypair: KeyPair, url: str = "http://site.test/posts") -> DatasetRecord:
    digest = keccak256(content.encode("utf-8"))
    return DatasetRecord(
        url=url,
        selector="p.post-body",
        content=content,
        crawl_time=1_700_000_000.0,
        crawler="Googlebot",
        consent_tag_hash=digest.hex,
        consent_tag_sig=sign_digest(keypair.private_key, digest).hex(),
    )


def plain_record(content: str, masked: bool = False) -> DatasetRecord:
    return DatasetRecord(
        url="http://site.test/posts",
        selector="p.post-body",
        content="" if masked else content,
        crawl_time=1_700_000_000.0,
        crawler="Googlebot",
        masked=masked,
    )


def register(ledger, *records: DatasetRecord, custodian: str = "web-server") -> None:
    ledger.submit_tag_batch(
        [TagSubmission(r.consent_tag_hash, r.consent_tag_sig, custodian) for r in records]
    )


@pytest.fixture
def party(tmp_path, ledger_client) -> MLParty:
    return MLParty(PARTY, MLStores.open(tmp_path / "ml"), ledger_client, clock=lambda: 42.0)


def test_deduplicate_keeps_first_occurrence(keypair):
    a = tagged_record("one", keypair)
    b = tagged_record("one", keypair, url="http://mirror.test/posts")
    c = plain_record("two")
    assert deduplicate([a, c, b, c]) == [a, c]


def test_ingest_records_custody_and_training(party, ledger, keypair, tmp_path):
    first, second = tagged_record("first post", keypair), tagged_record("second post", keypair)
    register(ledger, first, second)
    path = tmp_path / "crawl.jsonl.gz"
    write_dataset([first, plain_record("untagged"), plain_record("", masked=True), second, first], path)

    summary = party.ingest_dataset(path)

    assert summary.total == 5
    assert summary.ingested == 3
    assert summary.duplicates == 1
    assert summary.skipped_masked == 1
    assert summary.quarantined == []
    assert summary.transfer_events == 2
    assert summary.training_events == 2
    assert summary.queued == 0

    entry = ledger.query_tag(first.consent_tag_hash)
    assert entry.custodians == {"web-server", PARTY}
    assert [e.kind for e in entry.events] == [EventKind.TRANSFER, EventKind.TRAINING]
    assert all(e.actor == PARTY for e in entry.events)

    consent = party.stores.consent_records[first.consent_tag_hash]
    assert consent.signature == first.consent_tag_sig
    assert consent.ingest_time == 42.0
    assert len(consent.record_ids) == 1
    assert consent.record_ids[0].startswith("crawl.jsonl.gz:")
    assert path.exists()


def test_reingest_skips_known_items(party, ledger, keypair, tmp_path):
    record = tagged_record("only once", keypair)
    register(ledger, record)
    path = tmp_path / "crawl.jsonl.gz"
    write_dataset([record], path)
    party.ingest_dataset(path)
    again = party.ingest_dataset(path)
    assert again.ingested == 0
    assert again.duplicates == 1
    assert len(party.stores.training.items) == 1
    assert read_dataset(party.stores.datasets_dir / path.name) == [record]


def test_mismatched_and_malformed_lines_are_quarantined(party, ledger, keypair, tmp_path):
    honest = tagged_record("honest", keypair)
    register(ledger, honest)
    forged = DatasetRecord(**{**honest.to_dict(), "content": "edited after tagging"})
    path = tmp_path / "mixed.jsonl.gz"
    with gzip.open(path, "wb") as handle:
        handle.write(orjson.dumps(honest.to_dict()) + b"\n")
        handle.write(b"{not json\n")
        handle.write(orjson.dumps({"url": "x", "surprise": 1}) + b"\n")
        handle.write(orjson.dumps(forged.to_dict()) + b"\n")

    summary = party.ingest_dataset(path)
    assert summary.ingested == 1
    assert sorted(q.line for q in summary.quarantined) == [2, 3, 4]
    assert "tag hash" in next(q.reason for q in summary.quarantined if q.line == 4)


def test_unreadable_dataset_is_a_usage_error(party, tmp_path):
    path = tmp_path / "broken.jsonl.gz"
    path.write_bytes(b"plain text, no gzip header")
    with pytest.raises(UsageError):
        party.ingest_dataset(path)


def test_moving_ingest_removes_the_source(party, ledger, keypair, tmp_path):
    record = tagged_record("moved", keypair)
    register(ledger, record)
    path = tmp_path / "handoff.jsonl.gz"
    write_dataset([record], path)
    party.ingest_dataset(path, keep_source=False)
    assert not path.exists()
    assert read_dataset(party.stores.datasets_dir / path.name) == [record]


def test_stores_survive_a_restart(party, ledger, keypair, tmp_path):
    record = tagged_record("persisted", keypair)
    register(ledger, record)
    path = tmp_path / "crawl.jsonl.gz"
    write_dataset([record, plain_record("also here")], path)
    party.ingest_dataset(path)

    reopened = MLStores.open(party.stores.root)
    assert reopened.training.items == party.stores.training.items
    assert reopened.training.version == party.stores.training.version
    assert reopened.consent_records == party.stores.consent_records
    assert reopened.held_tags() == {record.consent_tag_hash}


def test_events_for_unregistered_tags_queue_until_the_ledger_knows_them(party, ledger, keypair, tmp_path):
    record = tagged_record("early", keypair)
    path = tmp_path / "crawl.jsonl.gz"
    write_dataset([record], path)

    summary = party.ingest_dataset(path)
    assert summary.queued == 2
    assert [call.name for call in party.stores.pending] == ["transfer", "training"]
    assert party.flush_pending() == 0

    register(ledger, record)
    assert party.flush_pending() == 2
    assert party.stores.pending == []
    entry = ledger.query_tag(record.consent_tag_hash)
    assert PARTY in entry.custodians
    assert [e.kind for e in entry.events] == [EventKind.TRANSFER, EventKind.TRAINING]


class DownLedger(LocalLedgerClient):
    up = False

    def append_event(self, *args, **kwargs):
        if not self.up:
            raise LedgerTransportError("connection refused")
        return super().append_event(*args, **kwargs)


def test_transport_failures_keep_calls_in_order(tmp_path, ledger, keypair):
    client = DownLedger(ledger)
    party = MLParty(PARTY, MLStores.open(tmp_path / "ml"), client)
    records = [tagged_record("a", keypair), tagged_record("b", keypair)]
    register(ledger, *records)
    path = tmp_path / "crawl.jsonl.gz"
    write_dataset(records, path)

    party.ingest_dataset(path)
    assert len(MLStores.open(tmp_path / "ml").pending) == 4

    client.up = True
    assert party.flush_pending() == 4
    kinds = [e.kind for e in ledger.poll_events(0, party=PARTY)[0]]
    assert kinds == [EventKind.TRANSFER, EventKind.TRANSFER, EventKind.TRAINING, EventKind.TRAINING]


def test_withdrawal_retrains_then_deletes(party, ledger, keypair, tmp_path):
    gone, kept = tagged_record("withdraw me", keypair), tagged_record("keep me", keypair)
    register(ledger, gone, kept)
    path = tmp_path / "crawl.jsonl.gz"
    write_dataset([gone, kept], path)
    party.ingest_dataset(path)

    assert withdraw(ledger, keypair, gone.consent_tag_hash).accepted
    reports = party.poll_once()

    assert len(reports) == 1
    report = reports[0]
    assert report.held and report.removed_items == 1
    assert report.reported == ("retraining", "deletion")

    assert party.stores.references(gone.consent_tag_hash) == 0
    assert party.stores.references(kept.consent_tag_hash) > 0
    held = party.stores.datasets_dir / path.name
    assert [r.content for r in read_dataset(held)] == ["keep me"]

    entry = ledger.query_tag(gone.consent_tag_hash)
    tail = [(e.kind, e.actor) for e in entry.events[-2:]]
    assert tail == [(EventKind.RETRAINING_COMPLETED, PARTY), (EventKind.DELETION_COMPLETED, PARTY)]
    assert PARTY not in entry.custodians
    assert entry.withdrawal.status == "requested"

    assert party.poll_once() == []


def test_repeated_withdrawal_event_is_a_duplicate(party, ledger, keypair, tmp_path):
    record = tagged_record("twice", keypair)
    register(ledger, record)
    path = tmp_path / "crawl.jsonl.gz"
    write_dataset([record], path)
    party.ingest_dataset(path)
    withdraw(ledger, keypair, record.consent_tag_hash)
    event = next(
        e for e in ledger.poll_events(0)[0] if e.kind is EventKind.WITHDRAWAL_REQUESTED
    )

    first = party.handle_withdrawal_event(event)
    second = party.handle_withdrawal_event(event)
    assert first.held and not first.duplicate
    assert second.duplicate and second.removed_items == 0
    completions = [
        e for e in ledger.query_tag(record.consent_tag_hash).events if e.kind is EventKind.DELETION_COMPLETED
    ]
    assert len(completions) == 1


def test_withdrawal_for_a_tag_never_held(party):
    event = LedgerEvent(9, EventKind.WITHDRAWAL_REQUESTED, "consent-request-handler", "ab" * 32)
    report = party.handle_withdrawal_event(event)
    assert report is not None and not report.held
    assert party.handle_withdrawal_event(LedgerEvent(10, EventKind.CRAWL, "GPTBot", "ab" * 32)) is None


def test_transfer_makes_the_recipient_a_custodian(party, ledger, keypair, tmp_path):
    record = tagged_record("shared", keypair)
    register(ledger, record)
    path = tmp_path / "crawl.jsonl.gz"
    write_dataset([record], path)
    party.ingest_dataset(path)

    held = party.stores.datasets_dir / path.name
    summary = party.transfer_dataset(held, tmp_path / "to-partner.jsonl.gz", "partner-lab")
    assert summary.tags == 1
    assert read_dataset(tmp_path / "to-partner.jsonl.gz") == [record]
    assert "partner-lab" in ledger.query_tag(record.consent_tag_hash).custodians

    with pytest.raises(UsageError):
        party.transfer_dataset(path, tmp_path / "nope.jsonl.gz", "partner-lab")


def test_an_unknown_tag_does_not_hold_up_other_calls(party, ledger, keypair, tmp_path):
    orphan, good = tagged_record("never logged", keypair), tagged_record("logged", keypair)
    register(ledger, good, custodian=PARTY)
    path = tmp_path / "crawl.jsonl.gz"
    write_dataset([orphan, good], path)

    summary = party.ingest_dataset(path)
    assert summary.queued == 2
    assert summary.transfer_events == 1
    assert summary.training_events == 1

    withdraw(ledger, keypair, good.consent_tag_hash)
    for _ in range(3):
        reports = party.poll_once()
        if reports:
            assert reports[0].reported == ("retraining", "deletion")

    assert ledger.query_tag(good.consent_tag_hash).withdrawal.status == "completed"
    assert [(call.tag_hash, call.name) for call in party.stores.pending] == [
        (orphan.consent_tag_hash, "transfer"),
        (orphan.consent_tag_hash, "training"),
    ]

    register(ledger, orphan)
    assert party.flush_pending() == 2
    assert party.stores.pending == []


def test_withdrawn_content_is_not_ingested_again(party, ledger, keypair, tmp_path):
    gone, kept = tagged_record("withdrawn for good", keypair), tagged_record("still fine", keypair)
    register(ledger, gone, kept, custodian=PARTY)
    path = tmp_path / "crawl.jsonl.gz"
    write_dataset([gone, kept], path)
    party.ingest_dataset(path)

    withdraw(ledger, keypair, gone.consent_tag_hash)
    party.poll_once()
    assert ledger.query_tag(gone.consent_tag_hash).withdrawal.status == "completed"
    events_before = len(ledger.query_tag(gone.consent_tag_hash).events)

    again = party.ingest_dataset(path)
    assert again.skipped_withdrawn == 1
    assert again.ingested == 0
    assert party.stores.references(gone.consent_tag_hash) == 0
    entry = ledger.query_tag(gone.consent_tag_hash)
    assert len(entry.events) == events_before
    assert PARTY not in entry.custodians


def test_tags_under_withdrawal_are_skipped_before_first_ingest(party, ledger, keypair, tmp_path):
    record = tagged_record("withdrawn before crawl reached us", keypair)
    register(ledger, record)
    withdraw(ledger, keypair, record.consent_tag_hash)
    path = tmp_path / "crawl.jsonl.gz"
    write_dataset([record, plain_record("untagged")], path)

    summary = party.ingest_dataset(path)
    assert summary.skipped_withdrawn == 1
    assert summary.ingested == 1
    assert party.stores.references(record.consent_tag_hash) == 0


def test_tags_survive_crawl_dedup_and_ingest_for_a_hundred_posts(server, registered_crawlers, keypair, ledger_client, tmp_path):
    submitted = {}
    plain = set()
    for index in range(100):
        content = f"post number {index}"
        if index % 7 == 0:
            plain.add(content)
            assert server.submit(content).status_code == 200
            continue
        config = "Googlebot:0;default:1" if index % 10 == 0 else "default:1"
        headers = tagged_headers(content.encode("utf-8"), keypair, config)
        assert server.submit(content, headers).status_code == 200
        if index % 10 != 0:
            submitted[content] = headers[TAG_HASH_HEADER]
    server.sync()

    records = crawl_site(
        ["http://testserver/posts"],
        registered_crawlers["Googlebot"],
        CrawlSettings(min_delay=0.0, follow_links=False),
        client=server.client,
    )
    tagged = [r for r in records if r.tagged]
    assert {r.content for r in tagged} == set(submitted)
    for record in tagged:
        assert record.consent_tag_hash == keccak256(record.content.encode("utf-8")).hex
        assert record.consent_tag_hash == submitted[record.content]
    assert {r.content for r in records if not r.tagged and not r.masked} == plain
    assert sum(r.masked for r in records) == 100 - len(submitted) - len(plain)

    unmasked = [r for r in records if not r.masked]
    assert deduplicate(unmasked + unmasked) == unmasked

    path = tmp_path / "crawl.jsonl.gz"
    write_dataset(records, path)
    party = MLParty(PARTY, MLStores.open(tmp_path / "ml"), ledger_client)
    summary = party.ingest_dataset(path)
    assert summary.quarantined == []
    assert summary.ingested == len(submitted) + len(plain)
    assert summary.training_events == len(submitted)
    for item in party.stores.training.items:
        if item.tag_hash is not None:
            assert item.tag_hash == submitted[item.content]
    assert set(party.stores.consent_records) == set(submitted.values())
