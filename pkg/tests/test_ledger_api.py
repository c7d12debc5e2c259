import pytest

from fishnet.core.consent import CrawlerAgentConfig
from fishnet.core.crypto import keccak256, sign_digest
from fishnet.core.exceptions import (
    CapacityError,
    EmptyBatchError,
    NoActiveWithdrawalError,
    NotCustodianError,
    UnknownTagError,
)
from fishnet.ledger.client import HttpLedgerClient
from fishnet.ledger.state import TX_CAPACITY, CompletionAction, EventKind, RejectReason, TagSubmission, WithdrawalRequest


@pytest.fixture
def remote(ledger_http) -> HttpLedgerClient:
    return HttpLedgerClient(client=ledger_http)


def upload(remote, keypair, content=b"post"):
    digest = keccak256(content)
    sig = sign_digest(keypair.private_key, digest).hex()
    remote.submit_tag_batch([TagSubmission(digest.hex, sig, "web-server")])
    return digest.hex, sig


def test_agent_registry_over_http(remote, keypair):
    assert remote.agents() == (0, [])
    agent = CrawlerAgentConfig("GPTBot", "GPTBot", ("20.15.240.64/28",), keypair.public_hex)
    assert remote.register_agent(agent) == 1
    version, agents = remote.agents()
    assert version == 1 and agents == [agent]


def test_invalid_agent_is_refused(ledger_http):
    response = ledger_http.post(
        "/agents",
        json={"name": "GPTBot", "user_agent_pattern": "GPTBot", "ip_ranges": ["nope"], "public_key": "00"},
    )
    assert response.status_code == 422


def test_batch_receipt_and_errors(ledger_http, remote, keypair):
    digest = keccak256(b"x").hex
    response = ledger_http.post("/tags/batch", json={"entries": [{"hash": digest, "sig": "00", "custodian": "s"}]})
    assert response.json() == {"tx_id": "tx-000001", "count": 1, "first_seq": 1, "last_seq": 1}
    with pytest.raises(EmptyBatchError):
        remote.submit_tag_batch([])
    too_many = [TagSubmission(f"{i:064x}", "00", "s") for i in range(TX_CAPACITY + 1)]
    with pytest.raises(CapacityError):
        remote.submit_tag_batch(too_many)


def test_query_unknown_tag(ledger_http, remote):
    assert ledger_http.get(f"/tags/{'00' * 32}").status_code == 404
    assert remote.query_tag("00" * 32) is None


def test_events_and_polling(remote, keypair):
    tag_hash, _ = upload(remote, keypair)
    assert remote.append_event(tag_hash, EventKind.CRAWL, "GPTBot", "served by web-server") == 2
    assert remote.append_event(tag_hash, EventKind.TRANSFER, "ml-corp") == 3
    events, high_water = remote.poll_events(since=2, party="ml-corp")
    assert high_water == 3
    assert [(e.seq, e.kind) for e in events] == [(3, EventKind.TRANSFER)]
    entry = remote.query_tag(tag_hash)
    assert entry.custodians == {"ml-corp", "web-server"}
    assert [e.detail for e in entry.events][0] == "served by web-server"


def test_append_for_unknown_tag(remote):
    with pytest.raises(UnknownTagError):
        remote.append_event(keccak256(b"nothing").hex, EventKind.TRAINING, "ml-corp")


def test_negative_cursor_is_refused(ledger_http):
    assert ledger_http.get("/events", params={"since": -1}).status_code == 422


def test_withdrawal_over_http(remote, keypair, other_keypair):
    tag_hash, sig = upload(remote, keypair)
    challenge = remote.issue_challenge()
    assert len(challenge.nonce) == 32

    forged = WithdrawalRequest(
        tag_hash, sig, other_keypair.public_hex, challenge.id,
        sign_digest(other_keypair.private_key, keccak256(challenge.nonce)).hex(),
    )
    outcome = remote.submit_withdrawal(forged)
    assert not outcome.accepted and outcome.reason is RejectReason.BAD_TAG_SIGNATURE

    honest = WithdrawalRequest(
        tag_hash, sig, keypair.public_hex, challenge.id,
        sign_digest(keypair.private_key, keccak256(challenge.nonce)).hex(),
    )
    outcome = remote.submit_withdrawal(honest)
    assert outcome.accepted and outcome.request_id == "wr-000001"
    assert remote.query_tag(tag_hash).withdrawal_status == "requested"

    with pytest.raises(NotCustodianError):
        remote.report_completion(tag_hash, "ml-corp", CompletionAction.DELETION)
    remote.report_completion(tag_hash, "web-server", CompletionAction.DELETION)
    assert remote.query_tag(tag_hash).withdrawal_status == "completed"
    with pytest.raises(NoActiveWithdrawalError):
        remote.report_completion(tag_hash, "web-server", CompletionAction.DELETION)

