import pytest

from fishnet.client.consent_endpoint import request_withdrawal, track_journey
from fishnet.client.keystore import Keystore
from fishnet.client.records import LocalConsentRecord, RecordStore
from fishnet.core.crypto import keccak256, sign_digest
from fishnet.core.exceptions import TaggingError, UnknownTagError, WithdrawalRejected
from fishnet.ledger.audit import audit_custodians
from fishnet.ledger.state import CompletionAction, EventKind, TagSubmission


@pytest.fixture
def keystore(tmp_path):
    keystore = Keystore(tmp_path / "ks")
    keystore.generate(seed="journey-user")
    return keystore


@pytest.fixture
def store(keystore):
    return RecordStore(keystore.records_path)


def publish(ledger, keystore, store, content=b"my post"):
    """What the agent and server do for one submission."""
    _, keypair = keystore.active()
    digest = keccak256(content)
    sig = sign_digest(keypair.private_key, digest).hex()
    store.append(LocalConsentRecord(digest.hex, sig, keypair.public_hex, "default:1", "http://s/submit", "POST", 1.0))
    ledger.submit_tag_batch([TagSubmission(digest.hex, sig, "web-server")])
    return digest.hex


def test_journey_report(ledger, ledger_client, keystore, store):
    tag_hash = publish(ledger, keystore, store)
    ledger.append_event(tag_hash, EventKind.CRAWL, "Googlebot", "served by web-server")
    ledger.append_event(tag_hash, EventKind.TRANSFER, "ml-corp")
    ledger.append_event(tag_hash, EventKind.TRAINING, "ml-corp", "ds:abc")

    report = track_journey(store, tag_hash, ledger_client)
    assert report.kinds == ["crawl", "transfer", "training"]
    assert report.custodians == ["ml-corp", "web-server"]
    assert report.withdrawal == "none"


def test_journey_of_a_tag_not_on_the_ledger_yet(ledger_client, keystore, store):
    digest = keccak256(b"pending")
    store.append(LocalConsentRecord(digest.hex, "ab", "04", "default:1", "u", "POST", 1.0))
    assert track_journey(store, digest.hex, ledger_client).events == []


def test_journey_requires_a_local_record(ledger_client, store):
    with pytest.raises(UnknownTagError):
        track_journey(store, "ab" * 32, ledger_client)


def test_withdrawal_and_duplicate(ledger, ledger_client, keystore, store):
    tag_hash = publish(ledger, keystore, store)
    receipt = request_withdrawal(store, tag_hash, ledger_client, keystore)
    assert receipt.request_id == "wr-000001" and not receipt.duplicate
    again = request_withdrawal(store, tag_hash, ledger_client, keystore)
    assert again.duplicate and again.seq == receipt.seq
    assert track_journey(store, tag_hash, ledger_client).withdrawal == "requested"


def test_withdrawal_with_a_foreign_key_is_rejected(ledger, ledger_client, keystore, store, other_keypair):
    tag_hash = publish(ledger, keystore, store)
    with pytest.raises(WithdrawalRejected) as info:
        request_withdrawal(store, tag_hash, ledger_client, keypair=other_keypair)
    assert info.value.reason == "bad-tag-signature"


def test_withdrawal_needs_the_tagging_key(ledger, ledger_client, keystore, store, tmp_path):
    tag_hash = publish(ledger, keystore, store)
    with pytest.raises(TaggingError):
        request_withdrawal(store, tag_hash, ledger_client, Keystore(tmp_path / "other"))
    with pytest.raises(UnknownTagError):
        request_withdrawal(store, "cd" * 32, ledger_client, keystore)


def test_custodian_audit(ledger, ledger_client, keystore, store):
    kept = publish(ledger, keystore, store, b"kept")
    moved = publish(ledger, keystore, store, b"moved")
    ledger.append_event(moved, EventKind.TRANSFER, "ml-corp")

    assert audit_custodians(ledger_client, {"web-server": {kept, moved}, "ml-corp": {moved}}) == []

    [mismatch] = audit_custodians(ledger_client, {"web-server": {kept}, "ml-corp": {moved}})
    assert mismatch.tag_hash == moved
    assert mismatch.on_ledger == {"web-server", "ml-corp"}
    assert mismatch.holding == {"ml-corp"}

    request_withdrawal(store, moved, ledger_client, keystore)
    ledger.report_completion(moved, "web-server", CompletionAction.DELETION)
    assert audit_custodians(ledger_client, {"web-server": {kept}, "ml-corp": {moved}}) == []
