"""
End-to-end data journey: users post through the tagging agent, crawlers
scrape the server, ML parties ingest the datasets, scripted withdrawals run,
and independent oracles check the outcome.
"""

import asyncio
import logging
import os
import shutil
import signal
import socket
import subprocess
import sys
import time
from contextlib import ExitStack
from dataclasses import dataclass
from pathlib import Path
from typing import List

import httpx
import orjson
import yaml
from fastapi.testclient import TestClient
from pydantic import BaseModel, Field, ValidationError, model_validator

from fishnet.api.deps import get_client_ip
from fishnet.client.agent import ConsentTagger, TaggingSettings
from fishnet.client.consent_endpoint import request_withdrawal, track_journey
from fishnet.client.keystore import Keystore
from fishnet.client.records import RecordStore
from fishnet.core.config import Settings
from fishnet.core.consent import (
    ConsentConfig,
    CrawlerAgentConfig,
    Flag,
    parse_consent_config,
    serialize_consent_config,
)
from fishnet.core.crypto import generate_keypair, keccak256
from fishnet.core.db import build_engine, build_sessionmaker
from fishnet.core.exceptions import ConsentConfigError, ScenarioError
from fishnet.crawler.dataset import read_dataset, write_dataset
from fishnet.crawler.spider import CrawlerIdentity, CrawlSettings, crawl_site
from fishnet.crud.data import find_tag_hashes
from fishnet.ledger.audit import audit_custodians
from fishnet.ledger.client import HttpLedgerClient, LedgerClient
from fishnet.ledger.state import ConsentLedger, EventKind
from fishnet.main import create_ledger_app, create_server_app
from fishnet.ml.pipeline import MLParty
from fishnet.ml.stores import MLStores

logger = logging.getLogger(__name__)

LOOPBACK_RANGE = "127.0.0.0/8"
QUIESCENCE_ROUNDS = 30


class UserSpec(BaseModel):
    name: str
    consent: str | None = None
    posts: int = Field(2, ge=0)


class CrawlerSpec(BaseModel):
    name: str
    user_agent_pattern: str | None = None
    ip_ranges: List[str] = Field(default_factory=lambda: [LOOPBACK_RANGE])
    # users allowing this crawler when their consent is generated
    allowed_in: int | None = None


class WithdrawalSpec(BaseModel):
    user: str
    post: int = Field(0, ge=0)


class ScenarioSpec(BaseModel):
    seed: int = 7
    server_party: str = "web-server"
    users: List[UserSpec]
    crawlers: List[CrawlerSpec]
    ml_parties: List[str] = Field(default_factory=lambda: ["ml-corp"])
    withdrawals: List[WithdrawalSpec] = Field(default_factory=list)

    @model_validator(mode="after")
    def references_resolve(self):
        posts = {user.name: user.posts for user in self.users}
        if len(posts) != len(self.users):
            raise ValueError("user names must be unique")
        for withdrawal in self.withdrawals:
            if withdrawal.user not in posts:
                raise ValueError(f"withdrawal names unknown user {withdrawal.user!r}")
            if withdrawal.post >= posts[withdrawal.user]:
                raise ValueError(
                    f"withdrawal names post {withdrawal.post} of {withdrawal.user}, "
                    f"who only makes {posts[withdrawal.user]}"
                )
        for user in self.users:
            if user.consent is not None:
                try:
                    parse_consent_config(user.consent)
                except ConsentConfigError as exc:
                    raise ValueError(f"{user.name}: {exc}") from exc
        return self

    def consent_for(self, index: int) -> ConsentConfig:
        user = self.users[index]
        if user.consent is not None:
            return parse_consent_config(user.consent)
        rules = {}
        for crawler in self.crawlers:
            allowed = crawler.allowed_in is None or index < crawler.allowed_in
            rules[crawler.name] = Flag.ALLOW if allowed else Flag.DENY
        return ConsentConfig(rules, Flag.ALLOW)


def load_scenario(path: Path | str) -> ScenarioSpec:
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        return ScenarioSpec.model_validate(data)
    except (OSError, yaml.YAMLError, ValidationError) as exc:
        raise ScenarioError(f"invalid scenario {path}: {exc}") from exc


def reference_scenario() -> ScenarioSpec:
    return ScenarioSpec(
        users=[
            UserSpec(name="alice", consent="GPTBot:0;Googlebot:1;default:0"),
            UserSpec(name="bob", consent="GPTBot:0;Googlebot:1;default:0"),
        ],
        crawlers=[CrawlerSpec(name="Googlebot"), CrawlerSpec(name="GPTBot")],
        withdrawals=[WithdrawalSpec(user="alice", post=0)],
    )


# Reports


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class CrawlSummary(BaseModel):
    crawler: str
    records: int
    tagged: int
    masked: int
    plain: int


class WithdrawalSummary(BaseModel):
    user: str
    post: int
    tag_hash: str
    request_id: str
    status: str
    deleted_by: List[str]


class ScenarioReport(BaseModel):
    posts: int
    crawls: List[CrawlSummary]
    withdrawals: List[WithdrawalSummary]
    checks: List[CheckResult]
    duration: float = 0.0

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def comparable(self) -> dict:
        """The report without wall-clock fields."""
        return self.model_dump(exclude={"duration"})


# Parties


@dataclass
class PostedItem:
    user: str
    index: int
    body: str
    tag_hash: str
    config: ConsentConfig


def post_body(user: str, index: int) -> str:
    return f"{user} says: post number {index} of the scenario."


class Parties:
    """How a scenario reaches the ledger, the server and the users' agents."""

    ledger: LedgerClient
    server_base: str

    def post(self, user: str, keystore: Keystore, body: str) -> None: ...

    def crawl(self, identity: CrawlerIdentity, settings: CrawlSettings) -> list: ...

    def sync_server(self) -> None: ...

    def regular_view(self) -> list[str]: ...

    def server_tag_hashes(self) -> set[str]: ...

    def close(self) -> None: ...


async def _stored_hashes(database_uri: str) -> set[str]:
    engine = build_engine(database_uri)
    try:
        async with build_sessionmaker(engine)() as db:
            return set(await find_tag_hashes(db))
    finally:
        await engine.dispose()


class InProcessParties(Parties):
    """Every party in this process; HTTP boundaries through TestClient transports."""

    def __init__(self, spec: ScenarioSpec, workdir: Path):
        self._stack = ExitStack()
        self.ledger_state = ConsentLedger(seed=spec.seed)
        ledger_http = self._stack.enter_context(TestClient(create_ledger_app(self.ledger_state)))
        self.ledger = HttpLedgerClient(client=ledger_http)
        self.settings = Settings(
            DATABASE_URI=f"sqlite+aiosqlite:///{workdir / 'server.db'}",
            PARTY_ID=spec.server_party,
            SYNC_INTERVAL=0,
        )
        app = create_server_app(self.settings, self.ledger, run_sync_loop=False)
        app.dependency_overrides[get_client_ip] = lambda: "127.0.0.1"
        self.server = self._stack.enter_context(TestClient(app))
        self.server_base = str(self.server.base_url)

    def post(self, user: str, keystore: Keystore, body: str) -> None:
        tagger = ConsentTagger(TaggingSettings.from_keystore(keystore), RecordStore(keystore.records_path))
        response = self.server.post(
            "/submit", params={"author": user}, content=body.encode("utf-8"), auth=tagger
        )
        response.raise_for_status()

    def crawl(self, identity: CrawlerIdentity, settings: CrawlSettings) -> list:
        return crawl_site([f"{self.server_base}/posts"], identity, settings, client=self.server)

    def sync_server(self) -> None:
        self.server.post("/ledger-sync").raise_for_status()

    def regular_view(self) -> list[str]:
        response = self.server.get("/api/posts", headers={"User-Agent": "Mozilla/5.0 (Windows NT 10.0)"})
        return [item["content"] for item in response.json()["data"]]

    def server_tag_hashes(self) -> set[str]:
        return asyncio.run(_stored_hashes(self.settings.DATABASE_URI))

    def close(self) -> None:
        self._stack.close()


def _free_port(host: str = "127.0.0.1") -> int:
    with socket.socket() as sock:
        sock.bind((host, 0))
        return sock.getsockname()[1]


def _wait_ready(url: str, timeout: float = 20.0) -> None:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        try:
            if httpx.get(url, timeout=1.0).status_code < 500:
                return
        except httpx.HTTPError:
            pass
        time.sleep(0.1)
    raise ScenarioError(f"{url} did not come up within {timeout}s")


class SubprocessParties(Parties):
    """Ledger, server and one tagging proxy per user as child processes on loopback."""

    def __init__(self, spec: ScenarioSpec, workdir: Path, host: str = "127.0.0.1"):
        self.workdir = workdir
        self.host = host
        self.children: list[subprocess.Popen] = []
        self.proxies: dict[str, str] = {}
        ledger_port, server_port = _free_port(host), _free_port(host)
        self.database_uri = f"sqlite+aiosqlite:///{workdir / 'server.db'}"
        self.env = {
            **os.environ,
            "FISHNET_LEDGER_URL": f"http://{host}:{ledger_port}",
            "FISHNET_LEDGER_SEED": str(spec.seed),
            "FISHNET_DATABASE_URI": self.database_uri,
            "FISHNET_PARTY_ID": spec.server_party,
            "FISHNET_SYNC_INTERVAL": "0.2",
        }
        try:
            self._spawn(["ledger", "--host", host, "--port", str(ledger_port)])
            _wait_ready(f"http://{host}:{ledger_port}/agents")
            self._spawn(["serve", "--host", host, "--port", str(server_port)])
            _wait_ready(f"http://{host}:{server_port}/health")
        except BaseException:
            self.close()
            raise
        self.ledger = HttpLedgerClient(f"http://{host}:{ledger_port}")
        self.server_base = f"http://{host}:{server_port}"
        self.http = httpx.Client(base_url=self.server_base, timeout=10.0)

    def _spawn(self, args: list[str], env: dict | None = None) -> None:
        command = [sys.executable, "-m", "fishnet", *args]
        self.children.append(subprocess.Popen(command, env=env or self.env))

    def _proxy_for(self, user: str, keystore: Keystore) -> str:
        if user not in self.proxies:
            port = _free_port(self.host)
            env = {**self.env, "FISHNET_KEYSTORE": str(keystore.root)}
            self._spawn(["proxy", "--host", self.host, "--port", str(port)], env=env)
            self.proxies[user] = f"http://{self.host}:{port}"
            deadline = time.monotonic() + 20.0
            while True:
                try:
                    with socket.create_connection((self.host, port), timeout=0.5):
                        break
                except OSError:
                    if time.monotonic() > deadline:
                        raise ScenarioError(f"proxy for {user} did not come up")
                    time.sleep(0.1)
        return self.proxies[user]

    def post(self, user: str, keystore: Keystore, body: str) -> None:
        with httpx.Client(proxy=self._proxy_for(user, keystore), timeout=10.0) as client:
            response = client.post(
                f"{self.server_base}/submit", params={"author": user}, content=body.encode("utf-8")
            )
            response.raise_for_status()

    def crawl(self, identity: CrawlerIdentity, settings: CrawlSettings) -> list:
        return crawl_site([f"{self.server_base}/posts"], identity, settings)

    def sync_server(self) -> None:
        self.http.post("/ledger-sync").raise_for_status()

    def regular_view(self) -> list[str]:
        response = self.http.get("/api/posts", headers={"User-Agent": "Mozilla/5.0 (Windows NT 10.0)"})
        return [item["content"] for item in response.json()["data"]]

    def server_tag_hashes(self) -> set[str]:
        return asyncio.run(_stored_hashes(self.database_uri))

    def close(self) -> None:
        if getattr(self, "http", None) is not None:
            self.http.close()
        for child in reversed(self.children):
            if child.poll() is None:
                child.send_signal(signal.SIGINT)
        for child in self.children:
            try:
                child.wait(timeout=10)
            except subprocess.TimeoutExpired:
                child.kill()
        self.children.clear()


# Oracles


def _oracle_allows(config_text: str, crawler: str) -> bool:
    """Consent decision recomputed from the raw header text."""
    flags = dict(pair.split(":") for pair in config_text.split(";"))
    return flags.get(crawler, flags.get("default", "1")) == "1"


def _is_subsequence(wanted: list[str], kinds: list[str]) -> bool:
    remaining = iter(kinds)
    return all(kind in remaining for kind in wanted)


def run_scenario(spec: ScenarioSpec, workdir: Path | str, mode: str = "in-process") -> ScenarioReport:
    workdir = Path(workdir)
    if workdir.exists():
        shutil.rmtree(workdir)
    workdir.mkdir(parents=True)
    started = time.monotonic()
    if mode == "in-process":
        parties: Parties = InProcessParties(spec, workdir)
    elif mode == "subprocess":
        parties = SubprocessParties(spec, workdir)
    else:
        raise ScenarioError(f"unknown scenario mode {mode!r}")
    try:
        report = _run(spec, workdir, parties)
    finally:
        parties.close()
    report.duration = time.monotonic() - started
    return report


def _run(spec: ScenarioSpec, workdir: Path, parties: Parties) -> ScenarioReport:
    checks: list[CheckResult] = []
    ledger = parties.ledger

    identities = {}
    for crawler in spec.crawlers:
        keypair = generate_keypair(f"{spec.seed}:crawler:{crawler.name}")
        ledger.register_agent(
            CrawlerAgentConfig(
                name=crawler.name,
                user_agent_pattern=crawler.user_agent_pattern or crawler.name,
                ip_ranges=tuple(crawler.ip_ranges),
                public_key=keypair.public_hex,
            )
        )
        identities[crawler.name] = CrawlerIdentity(crawler.name, keypair)

    # users post through their tagging agents
    keystores: dict[str, Keystore] = {}
    posted: list[PostedItem] = []
    for index, user in enumerate(spec.users):
        keystore = Keystore(workdir / "users" / user.name)
        keystore.generate(seed=f"{spec.seed}:user:{user.name}")
        config = spec.consent_for(index)
        keystore.set_consent_config(config)
        keystores[user.name] = keystore
        for number in range(user.posts):
            body = post_body(user.name, number)
            parties.post(user.name, keystore, body)
            posted.append(PostedItem(user.name, number, body, keccak256(body.encode()).hex, config))
    parties.sync_server()

    # crawl
    datasets: dict[str, Path] = {}
    crawled: dict[str, list] = {}
    for name, identity in identities.items():
        records = parties.crawl(identity, CrawlSettings(follow_links=False))
        crawled[name] = records
        datasets[name] = workdir / "datasets" / f"{name}.jsonl.gz"
        datasets[name].parent.mkdir(parents=True, exist_ok=True)
        write_dataset(records, datasets[name])
    parties.sync_server()

    crawls = []
    filtering_errors = []
    preservation_errors = []
    local_hashes = {
        record.hash for keystore in keystores.values()
        for record in RecordStore(keystore.records_path).scan().records
    }
    for name, records in crawled.items():
        plain = {record.content for record in records if not record.masked}
        expected = {
            item.body for item in posted
            if _oracle_allows(serialize_consent_config(item.config), name)
        }
        if plain != expected:
            filtering_errors.append(f"{name}: served {sorted(plain ^ expected)} against the oracle")
        for record in records:
            if record.consent_tag_hash is None:
                continue
            digest = keccak256(record.content.encode()).hex
            if digest != record.consent_tag_hash or digest not in local_hashes:
                preservation_errors.append(f"{name}: {record.consent_tag_hash}")
        crawls.append(
            CrawlSummary(
                crawler=name,
                records=len(records),
                tagged=sum(record.consent_tag_hash is not None for record in records),
                masked=sum(record.masked for record in records),
                plain=sum(not record.masked and record.consent_tag_hash is None for record in records),
            )
        )
    checks.append(CheckResult(name="consent-filtering", passed=not filtering_errors, detail="; ".join(filtering_errors)))
    checks.append(CheckResult(name="tag-preservation", passed=not preservation_errors, detail="; ".join(preservation_errors)))

    # datasets change hands: every ML party ingests its own copy
    ml_parties = {}
    for party_id in spec.ml_parties:
        party = MLParty(party_id, MLStores.open(workdir / "ml" / party_id), ledger)
        for name, path in datasets.items():
            copy = workdir / "handoff" / party_id / path.name
            copy.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(path, copy)
            party.ingest_dataset(copy, keep_source=False)
        ml_parties[party_id] = party
    for path in datasets.values():
        path.unlink()

    served_tags = sorted({r.consent_tag_hash for rs in crawled.values() for r in rs if r.consent_tag_hash})
    incomplete = []
    for tag_hash in served_tags:
        owner = next(item for item in posted if item.tag_hash == tag_hash)
        journey = track_journey(RecordStore(keystores[owner.user].records_path), tag_hash, ledger)
        if not _is_subsequence(["crawl", "transfer", "training"], journey.kinds):
            incomplete.append(f"{tag_hash}: {journey.kinds}")
    checks.append(CheckResult(name="journey-completeness", passed=not incomplete, detail="; ".join(incomplete)))

    audit = audit_custodians(
        ledger,
        {spec.server_party: parties.server_tag_hashes(), **{p: m.stores.held_tags() for p, m in ml_parties.items()}},
    )
    checks.append(
        CheckResult(
            name="custodian-audit",
            passed=not audit,
            detail="; ".join(f"{m.tag_hash}: ledger {sorted(m.on_ledger)} vs held {sorted(m.holding)}" for m in audit),
        )
    )

    # scripted withdrawals
    receipts = []
    for withdrawal in spec.withdrawals:
        item = next(i for i in posted if i.user == withdrawal.user and i.index == withdrawal.post)
        keystore = keystores[withdrawal.user]
        receipt = request_withdrawal(RecordStore(keystore.records_path), item.tag_hash, ledger, keystore)
        receipts.append((withdrawal, item, receipt))

    _settle(parties, ml_parties.values(), [item.tag_hash for _, item, _ in receipts])

    withdrawals = []
    leftovers = []
    for withdrawal, item, receipt in receipts:
        entry = ledger.query_tag(item.tag_hash)
        kinds = [event.kind for event in entry.events] if entry else []
        deleted_by = sorted(e.actor for e in entry.events if e.kind is EventKind.DELETION_COMPLETED) if entry else []
        events = entry.events if entry else []
        retrained_by = {e.actor for e in events if e.kind is EventKind.RETRAINING_COMPLETED}
        trained_by = {e.actor for e in events if e.kind is EventKind.TRAINING}
        withdrawals.append(
            WithdrawalSummary(
                user=withdrawal.user,
                post=withdrawal.post,
                tag_hash=item.tag_hash,
                request_id=receipt.request_id,
                status=entry.withdrawal_status if entry else "none",
                deleted_by=deleted_by,
            )
        )
        if entry is None or entry.withdrawal_status != "completed":
            leftovers.append(f"{item.tag_hash}: withdrawal not completed")
        if item.body in parties.regular_view() or item.tag_hash in parties.server_tag_hashes():
            leftovers.append(f"{item.tag_hash}: still on the server")
        for party_id, party in ml_parties.items():
            if party.stores.references(item.tag_hash):
                leftovers.append(f"{item.tag_hash}: still referenced by {party_id}")
            for held in party.stores.held.values():
                if Path(held.path).exists() and any(r.consent_tag_hash == item.tag_hash for r in read_dataset(held.path)):
                    leftovers.append(f"{item.tag_hash}: still in {held.path}")
            if party_id in trained_by and party_id not in retrained_by:
                leftovers.append(f"{item.tag_hash}: no retraining-completed from {party_id}")
        if EventKind.WITHDRAWAL_REQUESTED not in kinds:
            leftovers.append(f"{item.tag_hash}: withdrawal never logged")
    checks.append(CheckResult(name="post-withdrawal-absence", passed=not leftovers, detail="; ".join(leftovers)))

    return ScenarioReport(posts=len(posted), crawls=crawls, withdrawals=withdrawals, checks=checks)


def _settle(parties: Parties, ml_parties, tag_hashes: list[str]) -> None:
    """Drive every consumer until the withdrawals complete and the ledger stops moving."""
    previous = -1
    for _ in range(QUIESCENCE_ROUNDS):
        parties.sync_server()
        for party in ml_parties:
            party.poll_once()
        _, high_water = parties.ledger.poll_events(since=10**12)
        statuses = [getattr(parties.ledger.query_tag(h), "withdrawal_status", "none") for h in tag_hashes]
        if high_water == previous and all(status == "completed" for status in statuses):
            return
        previous = high_water
        time.sleep(0.05)
    logger.warning("Scenario did not settle; reporting what is there")


def dump_report(report: ScenarioReport, path: Path | str) -> None:
    Path(path).write_bytes(orjson.dumps(report.model_dump(), option=orjson.OPT_INDENT_2))


__all__ = [
    "ScenarioReport",
    "ScenarioSpec",
    "load_scenario",
    "reference_scenario",
    "run_scenario",
]
