import time
from dataclasses import dataclass, field

import pytest
from fastapi.testclient import TestClient

from fishnet.api.deps import get_client_ip
from fishnet.client.agent import TaggingSettings, consent_headers
from fishnet.core.config import Settings
from fishnet.core.consent import ConsentConfig, CrawlerAgentConfig, parse_consent_config
from fishnet.core.crypto import KeyPair, generate_keypair, keccak256, sign_digest
from fishnet.crawler.spider import CrawlerIdentity
from fishnet.ledger.client import LocalLedgerClient
from fishnet.ledger.state import ConsentLedger, WithdrawalRequest
from fishnet.main import create_ledger_app, create_server_app

REGULAR_UA = "Mozilla/5.0 (X11; Linux x86_64) Firefox/128.0"
CRAWLER_NAMES = ("GPTBot", "Googlebot")


@pytest.fixture
def keypair() -> KeyPair:
    return generate_keypair("alice")


@pytest.fixture
def other_keypair() -> KeyPair:
    return generate_keypair("mallory")


@pytest.fixture
def ledger() -> ConsentLedger:
    return ConsentLedger(seed=11)


@pytest.fixture
def ledger_client(ledger) -> LocalLedgerClient:
    return LocalLedgerClient(ledger)


@pytest.fixture
def ledger_http(ledger):
    with TestClient(create_ledger_app(ledger)) as client:
        yield client


@pytest.fixture
def crawler_identities() -> dict[str, CrawlerIdentity]:
    return {name: CrawlerIdentity(name, generate_keypair(f"crawler:{name}")) for name in CRAWLER_NAMES}


@pytest.fixture
def registered_crawlers(ledger, crawler_identities) -> dict[str, CrawlerIdentity]:
    for name, identity in crawler_identities.items():
        ledger.register_agent(
            CrawlerAgentConfig(name, name, ("127.0.0.0/8",), identity.keypair.public_hex)
        )
    return crawler_identities


def tagged_headers(body: bytes, keypair: KeyPair, config: str | ConsentConfig = "default:1") -> dict:
    if isinstance(config, str):
        config = parse_consent_config(config)
    return consent_headers(body, TaggingSettings(keypair, config))


def crawler_headers(identity: CrawlerIdentity) -> dict:
    return identity.signed_headers(time.time())


@dataclass
class ServerHarness:
    client: TestClient
    settings: Settings
    source_ip: list[str] = field(default_factory=lambda: ["127.0.0.1"])

    @property
    def app(self):
        return self.client.app

    @property
    def state(self):
        return self.client.app.state.server

    def submit(self, body: str, headers: dict | None = None, author: str = "alice"):
        return self.client.post(
            "/submit", params={"author": author}, content=body.encode("utf-8"), headers=headers or {}
        )

    def submit_tagged(self, body: str, keypair: KeyPair, config: str = "default:1", author: str = "alice"):
        return self.submit(body, tagged_headers(body.encode("utf-8"), keypair, config), author)

    def sync(self) -> dict:
        response = self.client.post("/ledger-sync")
        response.raise_for_status()
        return response.json()

    def posts(self, headers: dict | None = None):
        return self.client.get("/api/posts", headers=headers or {"User-Agent": REGULAR_UA})


@pytest.fixture
def make_server(tmp_path, ledger_client):
    """Build server harnesses over a temporary SQLite store; closed at teardown."""
    opened = []

    def factory(name: str = "server", ledger=None, **overrides) -> ServerHarness:
        settings = Settings(
            DATABASE_URI=f"sqlite+aiosqlite:///{tmp_path / f'{name}.db'}",
            SYNC_INTERVAL=0,
            **overrides,
        )
        app = create_server_app(settings, ledger or ledger_client, run_sync_loop=False)
        harness = ServerHarness(client=None, settings=settings)
        app.dependency_overrides[get_client_ip] = lambda: harness.source_ip[0]
        harness.client = TestClient(app)
        harness.client.__enter__()
        opened.append(harness.client)
        return harness

    yield factory
    for client in opened:
        client.__exit__(None, None, None)


@pytest.fixture
def server(make_server) -> ServerHarness:
    return make_server()


def withdraw(ledger, keypair: KeyPair, tag_hash: str):
    """Honest withdrawal straight against a ledger state machine or client."""
    entry = ledger.query_tag(tag_hash)
    challenge = ledger.issue_challenge()
    return ledger.submit_withdrawal(
        WithdrawalRequest(
            tag_hash,
            entry.signature,
            keypair.public_hex,
            challenge.id,
            sign_digest(keypair.private_key, keccak256(challenge.nonce)).hex(),
        )
    )
