"""
Ledger access for the other parties: in-process or over HTTP, same interface.
"""

import logging
from typing import Protocol

import httpx

from fishnet.core.consent import CrawlerAgentConfig
from fishnet.core.crypto import Challenge
from fishnet.core.exceptions import (
    AgentConfigError,
    CapacityError,
    EmptyBatchError,
    LedgerError,
    LedgerTransportError,
    NoActiveWithdrawalError,
    NotCustodianError,
    UnknownTagError,
)
from fishnet.ledger.state import (
    CompletionAction,
    ConsentLedger,
    EventKind,
    LedgerEvent,
    RejectReason,
    TagLedgerEntry,
    TagSubmission,
    WithdrawalOutcome,
    WithdrawalRequest,
    WithdrawalState,
)

logger = logging.getLogger(__name__)


class LedgerClient(Protocol):
    def register_agent(self, config: CrawlerAgentConfig) -> int: ...

    def agents(self) -> tuple[int, list[CrawlerAgentConfig]]: ...

    def submit_tag_batch(self, entries: list[TagSubmission]) -> tuple[str, int, int]: ...

    def append_event(self, tag_hash: str, kind: EventKind, actor: str, detail: str = "") -> int: ...

    def issue_challenge(self) -> Challenge: ...

    def submit_withdrawal(self, request: WithdrawalRequest) -> WithdrawalOutcome: ...

    def report_completion(self, tag_hash: str, custodian: str, action: CompletionAction) -> int: ...

    def query_tag(self, tag_hash: str) -> TagLedgerEntry | None: ...

    def poll_events(
        self, since: int = 0, party: str | None = None, tag_hash: str | None = None
    ) -> tuple[list[LedgerEvent], int]: ...


class LocalLedgerClient:
    """Talks to a ConsentLedger living in the same process."""

    def __init__(self, ledger: ConsentLedger):
        self.ledger = ledger

    def register_agent(self, config: CrawlerAgentConfig) -> int:
        return self.ledger.register_agent(config)

    def agents(self) -> tuple[int, list[CrawlerAgentConfig]]:
        return self.ledger.agents()

    def submit_tag_batch(self, entries: list[TagSubmission]) -> tuple[str, int, int]:
        tx = self.ledger.submit_tag_batch(list(entries))
        return tx.tx_id, tx.first_seq, tx.last_seq

    def append_event(self, tag_hash: str, kind: EventKind, actor: str, detail: str = "") -> int:
        return self.ledger.append_event(tag_hash, kind, actor, detail)

    def issue_challenge(self) -> Challenge:
        return self.ledger.issue_challenge()

    def submit_withdrawal(self, request: WithdrawalRequest) -> WithdrawalOutcome:
        return self.ledger.submit_withdrawal(request)

    def report_completion(self, tag_hash: str, custodian: str, action: CompletionAction) -> int:
        return self.ledger.report_completion(tag_hash, custodian, action)

    def query_tag(self, tag_hash: str) -> TagLedgerEntry | None:
        return self.ledger.query_tag(tag_hash)

    def poll_events(
        self, since: int = 0, party: str | None = None, tag_hash: str | None = None
    ) -> tuple[list[LedgerEvent], int]:
        return self.ledger.poll_events(since, party=party, tag_hash=tag_hash)


_STATUS_ERRORS: dict[int, type[LedgerError]] = {
    403: NotCustodianError,
    409: NoActiveWithdrawalError,
    413: CapacityError,
}


def _event_from_json(payload: dict) -> LedgerEvent:
    return LedgerEvent(
        seq=payload["seq"],
        kind=EventKind(payload["kind"]),
        actor=payload["actor"],
        tag_hash=payload["tag_hash"],
        detail=payload.get("detail", ""),
    )


class HttpLedgerClient:
    """
    Talks to `fishnet ledger` over HTTP. Any httpx.Client works as transport,
    including a TestClient wrapping the ledger app.
    """

    def __init__(self, base_url: str = "", client: httpx.Client | None = None, timeout: float = 10.0):
        self.client = client or httpx.Client(base_url=base_url, timeout=timeout)

    def _request(self, method: str, path: str, **kwargs) -> dict:
        try:
            response = self.client.request(method, path, **kwargs)
        except httpx.TransportError as exc:
            raise LedgerTransportError(f"ledger unreachable: {exc}") from exc
        if response.status_code < 400:
            return response.json()

        try:
            detail = response.json().get("detail", "")
        except ValueError:
            detail = response.text
        if response.status_code == 404:
            raise UnknownTagError(str(kwargs.get("json", {}).get("tag_hash", path)))
        if response.status_code in _STATUS_ERRORS:
            raise _STATUS_ERRORS[response.status_code](str(detail))
        if path == "/agents":
            raise AgentConfigError(str(detail))
        if path == "/tags/batch" and response.status_code == 400:
            raise EmptyBatchError(str(detail))
        if response.status_code >= 500:
            raise LedgerTransportError(f"ledger error {response.status_code}: {detail}")
        raise LedgerError(str(detail))

    def register_agent(self, config: CrawlerAgentConfig) -> int:
        payload = {
            "name": config.name,
            "user_agent_pattern": config.user_agent_pattern,
            "ip_ranges": list(config.ip_ranges),
            "public_key": config.public_key,
        }
        return self._request("POST", "/agents", json=payload)["version"]

    def agents(self) -> tuple[int, list[CrawlerAgentConfig]]:
        data = self._request("GET", "/agents")
        agents = [
            CrawlerAgentConfig(
                name=item["name"],
                user_agent_pattern=item["user_agent_pattern"],
                ip_ranges=tuple(item["ip_ranges"]),
                public_key=item["public_key"],
            )
            for item in data["agents"]
        ]
        return data["version"], agents

    def submit_tag_batch(self, entries: list[TagSubmission]) -> tuple[str, int, int]:
        payload = {
            "entries": [
                {"hash": item.hash, "sig": item.signature, "custodian": item.custodian}
                for item in entries
            ]
        }
        data = self._request("POST", "/tags/batch", json=payload)
        return data["tx_id"], data["first_seq"], data["last_seq"]

    def append_event(self, tag_hash: str, kind: EventKind, actor: str, detail: str = "") -> int:
        payload = {"tag_hash": tag_hash, "kind": EventKind(kind).value, "actor": actor, "detail": detail}
        return self._request("POST", "/events", json=payload)["seq"]

    def issue_challenge(self) -> Challenge:
        data = self._request("POST", "/challenge")
        return Challenge(id=data["id"], nonce=bytes.fromhex(data["nonce"]), expiry=data["expiry"])

    def submit_withdrawal(self, request: WithdrawalRequest) -> WithdrawalOutcome:
        payload = {
            "tag_hash": request.tag_hash,
            "tag_signature": request.tag_signature,
            "public_key": request.public_key,
            "challenge_id": request.challenge_id,
            "challenge_signature": request.challenge_signature,
        }
        data = self._request("POST", "/withdraw", json=payload)
        return WithdrawalOutcome(
            accepted=data["status"] == "accepted",
            seq=data.get("seq"),
            request_id=data.get("request_id"),
            reason=RejectReason(data["reason"]) if data.get("reason") else None,
            duplicate=data.get("duplicate", False),
        )

    def report_completion(self, tag_hash: str, custodian: str, action: CompletionAction) -> int:
        payload = {"tag_hash": tag_hash, "custodian": custodian, "action": CompletionAction(action).value}
        return self._request("POST", "/complete", json=payload)["seq"]

    def query_tag(self, tag_hash: str) -> TagLedgerEntry | None:
        try:
            data = self._request("GET", f"/tags/{tag_hash}")
        except UnknownTagError:
            return None
        withdrawal = None
        if data["withdrawal"] != "none":
            withdrawal = WithdrawalState(
                status=data["withdrawal"],
                request_id=data.get("withdrawal_request_id") or "",
                seq=0,
                custodians_at_request=frozenset(),
            )
        return TagLedgerEntry(
            hash=data["hash"],
            signature=data["signature"],
            custodians=set(data["custodians"]),
            events=[_event_from_json(item) for item in data["events"]],
            withdrawal=withdrawal,
        )

    def poll_events(
        self, since: int = 0, party: str | None = None, tag_hash: str | None = None
    ) -> tuple[list[LedgerEvent], int]:
        params: dict[str, str | int] = {"since": since}
        if party is not None:
            params["party"] = party
        if tag_hash is not None:
            params["tag"] = tag_hash
        data = self._request("GET", "/events", params=params)
        return [_event_from_json(item) for item in data["events"]], data["high_water"]
