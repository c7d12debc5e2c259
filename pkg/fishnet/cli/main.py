"""
The `fishnet` command: user tools, party daemons, the scenario runner and
the benchmarks under one binary.
"""

from contextlib import contextmanager
from pathlib import Path
from typing import List, Optional

import httpx
import typer
import uvicorn
from rich.console import Console
from rich.table import Table

from fishnet.cli.bench import bench_client, bench_server
from fishnet.cli.scenario import dump_report, load_scenario, reference_scenario, run_scenario
from fishnet.client.agent import ConsentTagger, TaggingSettings
from fishnet.client.consent_endpoint import request_withdrawal, track_journey
from fishnet.client.keystore import Keystore
from fishnet.client.proxy import run_proxy
from fishnet.client.records import RecordStore, list_local_records
from fishnet.core.config import settings
from fishnet.core.consent import NON_CRAWLABLE_HEADER, CrawlerAgentConfig, parse_consent_config, serialize_consent_config
from fishnet.core.crypto import KeyPair, generate_keypair
from fishnet.core.exceptions import FishnetError, UsageError
from fishnet.core.logging import setup_logging
from fishnet.crawler.dataset import write_dataset
from fishnet.crawler.spider import CrawlerIdentity, CrawlSettings, crawl_site
from fishnet.ledger.client import HttpLedgerClient
from fishnet.main import create_ledger_app, create_server_app
from fishnet.ml.pipeline import MLParty
from fishnet.ml.stores import MLStores

console = Console()

app = typer.Typer(
    name="fishnet",
    help="Consent tags for user data, from submission through crawling to model training.",
    no_args_is_help=True,
    pretty_exceptions_enable=False,
)

EXIT_VIOLATION = 1
EXIT_USAGE = 2


@app.callback()
def main(log_level: str = typer.Option(settings.LOG_LEVEL, "--log-level", help="Root log level")):
    setup_logging(log_level)


@contextmanager
def cli_errors():
    try:
        yield
    except FishnetError as exc:
        console.print(f"[red]error:[/red] {exc}")
        raise typer.Exit(EXIT_USAGE)
    except httpx.HTTPError as exc:
        console.print(f"[red]request failed:[/red] {exc}")
        raise typer.Exit(EXIT_USAGE)


def _keystore(path: Optional[Path]) -> Keystore:
    return Keystore(path or settings.KEYSTORE)


def _ledger(url: Optional[str]) -> HttpLedgerClient:
    return HttpLedgerClient(url or settings.LEDGER_URL, timeout=settings.LEDGER_TIMEOUT)


def _load_key(path: Path) -> KeyPair:
    try:
        return KeyPair.from_private_hex(path.read_text(encoding="utf-8").strip())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot load key from {path}: {exc}") from exc


KeystoreOpt = typer.Option(None, "--keystore", help="Keystore directory [FISHNET_KEYSTORE]")
LedgerOpt = typer.Option(None, "--ledger", help="Ledger URL [FISHNET_LEDGER_URL]")


# User tools


@app.command()
def keygen(
    keystore: Optional[Path] = KeystoreOpt,
    seed: Optional[str] = typer.Option(None, help="Deterministic key from a seed"),
    no_activate: bool = typer.Option(False, "--no-activate", help="Keep the current active key"),
):
    """Generate a P-384 key pair in the keystore."""
    with cli_errors():
        store = _keystore(keystore)
        key_id = store.generate(seed=seed, activate=not no_activate)
        console.print(f"{key_id}  {store.load(key_id).public_hex}")


@app.command()
def config(
    value: Optional[str] = typer.Argument(None, help='Consent config, e.g. "GPTBot:0;default:1"'),
    keystore: Optional[Path] = KeystoreOpt,
):
    """Show or set the consent config attached to every tagged submission."""
    with cli_errors():
        store = _keystore(keystore)
        if value is not None:
            store.set_consent_config(parse_consent_config(value))
        console.print(serialize_consent_config(store.consent_config()))


@app.command()
def post(
    url: str,
    body: Optional[str] = typer.Option(None, "--body", help="Text to submit"),
    file: Optional[Path] = typer.Option(None, "--file", help="Submit the contents of a file"),
    method: str = typer.Option("POST", "--method"),
    non_crawlable: bool = typer.Option(False, "--non-crawlable", help="Mark the data as never crawlable"),
    author: Optional[str] = typer.Option(None, "--author"),
    keystore: Optional[Path] = KeystoreOpt,
):
    """Submit data to a site through the tagging agent."""
    with cli_errors():
        if (body is None) == (file is None):
            raise UsageError("give exactly one of --body or --file")
        content = body.encode("utf-8") if body is not None else file.read_bytes()
        store = _keystore(keystore)
        headers = {NON_CRAWLABLE_HEADER: "1"} if non_crawlable else {}
        params = {"author": author} if author else None
        tagger = ConsentTagger(TaggingSettings.from_keystore(store), RecordStore(store.records_path))
        with httpx.Client(auth=tagger, timeout=30.0) as client:
            response = client.request(method.upper(), url, content=content, headers=headers, params=params)
        console.print(f"{response.status_code} {response.text}")
        if response.is_error:
            raise typer.Exit(EXIT_VIOLATION)


@app.command()
def records(
    url: Optional[str] = typer.Option(None, "--url", help="Only records whose URL contains this"),
    since: Optional[float] = typer.Option(None, help="Unix time lower bound"),
    until: Optional[float] = typer.Option(None, help="Unix time upper bound"),
    keystore: Optional[Path] = KeystoreOpt,
):
    """List local consent records, newest first."""
    with cli_errors():
        store = RecordStore(_keystore(keystore).records_path)
        table = Table("hash", "method", "url", "consent", "ts")
        scan = list_local_records(store, url_contains=url, since=since, until=until)
        for record in scan.records:
            table.add_row(record.hash, record.method, record.url, record.consent_config, f"{record.ts:.0f}")
        console.print(table)
        if scan.skipped:
            console.print(f"[yellow]{scan.skipped} corrupt lines skipped[/yellow]")


@app.command()
def track(tag_hash: str, keystore: Optional[Path] = KeystoreOpt, ledger: Optional[str] = LedgerOpt):
    """Show where a tagged submission has travelled."""
    with cli_errors():
        store = RecordStore(_keystore(keystore).records_path)
        journey = track_journey(store, tag_hash, _ledger(ledger))
        table = Table("seq", "kind", "actor", "detail", title=tag_hash)
        for event in journey.events:
            table.add_row(str(event.seq), event.kind.value, event.actor, event.detail)
        console.print(table)
        console.print(f"custodians: {', '.join(journey.custodians) or '-'}  withdrawal: {journey.withdrawal}")


@app.command()
def withdraw(tag_hash: str, keystore: Optional[Path] = KeystoreOpt, ledger: Optional[str] = LedgerOpt):
    """Withdraw consent for a tagged submission."""
    with cli_errors():
        store = _keystore(keystore)
        receipt = request_withdrawal(RecordStore(store.records_path), tag_hash, _ledger(ledger), store)
        note = " (already requested)" if receipt.duplicate else ""
        console.print(f"withdrawal {receipt.request_id} logged at seq {receipt.seq}{note}")


# Party daemons


@app.command()
def proxy(
    keystore: Optional[Path] = KeystoreOpt,
    host: str = typer.Option(settings.HOST, "--host"),
    port: int = typer.Option(settings.PROXY_PORT, "--port"),
):
    """Run the tagging agent as a local forward proxy."""
    with cli_errors():
        run_proxy(_keystore(keystore), host, port)


@app.command()
def serve(
    host: str = typer.Option(settings.HOST, "--host"),
    port: int = typer.Option(settings.SERVER_PORT, "--port"),
):
    """Run the web server party."""
    uvicorn.run(create_server_app(settings), host=host, port=port, log_config=None)


@app.command()
def ledger(
    host: str = typer.Option(settings.HOST, "--host"),
    port: int = typer.Option(settings.LEDGER_PORT, "--port"),
):
    """Run the simulated consent ledger."""
    uvicorn.run(create_ledger_app(config=settings), host=host, port=port, log_config=None)


@app.command("register-agent")
def register_agent(
    name: str,
    pattern: Optional[str] = typer.Option(None, "--pattern", help="User-Agent substring, defaults to NAME"),
    ip_range: List[str] = typer.Option(["127.0.0.0/8"], "--ip-range", help="CIDR the crawler fetches from"),
    public_key: Optional[str] = typer.Option(None, "--public-key", help="Uncompressed public key hex"),
    key: Optional[Path] = typer.Option(None, "--key", help="Private key file; its public half is registered"),
    ledger_url: Optional[str] = LedgerOpt,
):
    """Publish a crawler's agent configuration on the ledger."""
    with cli_errors():
        if (public_key is None) == (key is None):
            raise UsageError("give exactly one of --public-key or --key")
        public_hex = public_key or _load_key(key).public_hex
        try:
            agent = CrawlerAgentConfig(name, pattern or name, tuple(ip_range), public_hex)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        version = _ledger(ledger_url).register_agent(agent)
        console.print(f"registered {name}; registry version {version}")


@app.command()
def crawl(
    seeds: List[str] = typer.Option(..., "--seed", help="Start URL, repeatable"),
    name: str = typer.Option(..., "--identity", help="Crawler name as registered"),
    key: Optional[Path] = typer.Option(None, "--key", help="Private key for signed timestamps"),
    out: Path = typer.Option(Path("dataset.jsonl.gz"), "--out"),
    max_pages: int = typer.Option(100, "--max-pages"),
    min_delay: float = typer.Option(CrawlSettings.min_delay, "--min-delay"),
    max_delay: float = typer.Option(CrawlSettings.max_delay, "--max-delay"),
    no_follow: bool = typer.Option(False, "--no-follow", help="Only fetch the seeds"),
):
    """Crawl sites politely and write a tagged dataset."""
    with cli_errors():
        keypair = _load_key(key) if key is not None else generate_keypair()
        identity = CrawlerIdentity(name, keypair)
        crawl_settings = CrawlSettings(
            max_pages=max_pages, min_delay=min_delay, max_delay=max_delay, follow_links=not no_follow
        )
        summary = write_dataset(crawl_site(seeds, identity, crawl_settings), out)
        console.print(f"{summary.count} records, {summary.bytes} bytes -> {summary.path}")


def _ml_party(party: str, ledger: Optional[str], store_dir: Optional[Path]) -> MLParty:
    stores = MLStores.open((store_dir or settings.ML_STORE_DIR) / party)
    return MLParty(party, stores, _ledger(ledger), retrain_command=settings.RETRAIN_COMMAND)


@app.command()
def ingest(
    dataset: Path = typer.Option(..., "--dataset"),
    party: str = typer.Option("ml-corp", "--party"),
    ledger: Optional[str] = LedgerOpt,
    store_dir: Optional[Path] = typer.Option(None, "--store-dir", help="[FISHNET_ML_STORE_DIR]"),
    move: bool = typer.Option(False, "--move", help="Take the dataset instead of copying it"),
):
    """Ingest a crawled dataset into an ML party's training set."""
    with cli_errors():
        summary = _ml_party(party, ledger, store_dir).ingest_dataset(dataset, keep_source=not move)
        console.print(
            f"{summary.ingested}/{summary.total} ingested, {summary.duplicates} duplicates, "
            f"{summary.skipped_masked} masked, {summary.skipped_withdrawn} withdrawn, "
            f"{len(summary.quarantined)} quarantined, "
            f"{summary.queued} ledger calls queued"
        )
        if summary.quarantined:
            raise typer.Exit(EXIT_VIOLATION)


@app.command()
def watch(
    party: str = typer.Option("ml-corp", "--party"),
    ledger: Optional[str] = LedgerOpt,
    store_dir: Optional[Path] = typer.Option(None, "--store-dir"),
    interval: float = typer.Option(1.0, "--interval"),
):
    """Act on withdrawal requests for an ML party until interrupted."""
    with cli_errors():
        try:
            _ml_party(party, ledger, store_dir).watch(interval)
        except KeyboardInterrupt:
            pass


# Scenario and benchmarks


@app.command()
def scenario(
    spec: Optional[Path] = typer.Argument(None, help="Scenario YAML; the reference scenario when omitted"),
    mode: str = typer.Option("in-process", "--mode", help="in-process or subprocess"),
    workdir: Path = typer.Option(Path("./scenario-run"), "--workdir"),
    report: Optional[Path] = typer.Option(None, "--report", help="Write the report as JSON"),
):
    """Run the end-to-end data journey and check it."""
    with cli_errors():
        plan = load_scenario(spec) if spec is not None else reference_scenario()
        result = run_scenario(plan, workdir, mode=mode)
    table = Table("check", "result", "detail")
    for check in result.checks:
        table.add_row(check.name, "[green]pass[/green]" if check.passed else "[red]FAIL[/red]", check.detail)
    console.print(table)
    console.print(f"{result.posts} posts, {len(result.withdrawals)} withdrawals in {result.duration:.1f}s")
    if report is not None:
        dump_report(result, report)
    raise typer.Exit(result.exit_code)


@app.command("bench-client")
def bench_client_cmd(
    size: List[int] = typer.Option([1_000, 100_000, 1_000_000], "--size", help="Payload bytes, repeatable"),
    runs: int = typer.Option(20, "--runs"),
    out: Path = typer.Option(Path("bench-client.csv"), "--out"),
):
    """Time request dispatch with and without consent tagging."""
    with cli_errors():
        result = bench_client(size, runs)
    result.show(console)
    console.print(f"data: {result.write_csv(out)}")


@app.command("bench-server")
def bench_server_cmd(
    rows: List[int] = typer.Option([100, 1_000, 10_000], "--rows", help="Row count, repeatable"),
    runs: int = typer.Option(20, "--runs"),
    cache: Optional[bool] = typer.Option(None, "--cache/--no-cache", help="Only one cache mode"),
    out: Path = typer.Option(Path("bench-server.csv"), "--out"),
):
    """Time query processing for regular visitors against crawlers."""
    with cli_errors():
        modes = (False, True) if cache is None else (cache,)
        result = bench_server(rows, runs, modes)
    result.show(console)
    console.print(f"data: {result.write_csv(out)}")
