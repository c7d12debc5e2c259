"""
Micro-benchmarks for the two places consent handling costs time: tagging an
outgoing request on the client and filtering a query on the server.
"""

import asyncio
import logging
import statistics
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx
import numpy as np
import pandas as pd
from rich.console import Console
from rich.table import Table

from fishnet.client.agent import ConsentTagger, TaggingSettings, consent_headers
from fishnet.core.config import Settings
from fishnet.core.consent import ConsentConfig, ConsentTag, Flag
from fishnet.core.crypto import generate_keypair, keccak256, sign_digest
from fishnet.core.db import build_engine, build_sessionmaker, create_tables
from fishnet.core.exceptions import UsageError
from fishnet.crud.data import create_datum
from fishnet.ledger.client import LocalLedgerClient
from fishnet.ledger.state import ConsentLedger
from fishnet.server.query import render_html, serve_page
from fishnet.server.state import QueryCache, ServerState
from fishnet.server.visitor import REGULAR, VisitorClass, VisitorKind

logger = logging.getLogger(__name__)

MIN_RUNS = 20
CLIENT_SIZES = (1_000, 100_000, 1_000_000)
SERVER_ROWS = (100, 1_000, 10_000)
BENCH_CRAWLER = "Googlebot"


@dataclass(frozen=True)
class BenchPoint:
    size: int
    baseline: float
    with_consent: float
    # tagging alone on the client; unused on the server
    tagging: float = 0.0
    cache: bool = False

    @property
    def overhead(self) -> float:
        return self.with_consent - self.baseline


@dataclass
class BenchReport:
    name: str
    runs: int
    points: list[BenchPoint] = field(default_factory=list)

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "size": [p.size for p in self.points],
                "cache": [p.cache for p in self.points],
                "baseline_ms": [p.baseline * 1000 for p in self.points],
                "with_consent_ms": [p.with_consent * 1000 for p in self.points],
                "overhead_ms": [p.overhead * 1000 for p in self.points],
                "tagging_ms": [p.tagging * 1000 for p in self.points],
            }
        )

    def write_csv(self, path: Path | str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.frame().to_csv(path, index=False)
        return path

    def table(self) -> Table:
        table = Table(title=f"{self.name} (mean of {self.runs} runs)")
        for column in ("size", "cache", "baseline ms", "with consent ms", "overhead ms"):
            table.add_column(column, justify="right")
        for point in self.points:
            table.add_row(
                f"{point.size:,}",
                "on" if point.cache else "off",
                f"{point.baseline * 1000:.3f}",
                f"{point.with_consent * 1000:.3f}",
                f"{point.overhead * 1000:.3f}",
            )
        return table

    def show(self, console: Console | None = None) -> None:
        (console or Console()).print(self.table())


def _check_runs(runs: int) -> None:
    if runs < MIN_RUNS:
        raise UsageError(f"benchmarks average at least {MIN_RUNS} runs per point, got {runs}")


def _mean(samples: list[float]) -> float:
    return float(np.mean(np.asarray(samples, dtype=float)))


def _time(fn, runs: int) -> list[float]:
    samples = []
    for _ in range(runs):
        started = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - started)
    return samples


# Client side


def _payload(size: int) -> bytes:
    pattern = b"consent matters. "
    return (pattern * (size // len(pattern) + 1))[:size]


def bench_client(sizes=CLIENT_SIZES, runs: int = MIN_RUNS, seed: int = 1) -> BenchReport:
    """Request construction and dispatch, plain versus tagged, per payload size."""
    _check_runs(runs)
    settings = TaggingSettings(generate_keypair(seed), ConsentConfig({BENCH_CRAWLER: Flag.ALLOW}))
    transport = httpx.MockTransport(lambda request: httpx.Response(200))
    report = BenchReport("client request overhead", runs)

    with httpx.Client(transport=transport, base_url="http://bench.local") as plain, httpx.Client(
        transport=transport, base_url="http://bench.local", auth=ConsentTagger(settings)
    ) as tagged:
        for size in sizes:
            body = _payload(size)
            plain.post("/submit", content=body)
            tagged.post("/submit", content=body)
            baseline = _time(lambda: plain.post("/submit", content=body), runs)
            with_consent = _time(lambda: tagged.post("/submit", content=body), runs)
            tagging = _time(lambda: consent_headers(body, settings), runs)
            point = BenchPoint(size, _mean(baseline), _mean(with_consent), _mean(tagging))
            logger.info(
                f"client {size} bytes: baseline {point.baseline * 1000:.3f} ms, "
                f"tagged {point.with_consent * 1000:.3f} ms "
                f"(median {statistics.median(with_consent) * 1000:.3f} ms)"
            )
            report.points.append(point)
    return report


# Server side


async def _seed_rows(sessionmaker, rows: int, seed: int) -> None:
    keypair = generate_keypair(seed)
    config = ConsentConfig({BENCH_CRAWLER: Flag.ALLOW}, Flag.DENY)
    async with sessionmaker() as db:
        for number in range(rows):
            content = f"benchmark post {number}"
            digest = keccak256(content.encode())
            tag = None
            if number % 2 == 0:  # half the rows arrive tagged
                tag = ConsentTag(digest.hex, sign_digest(keypair.private_key, digest).hex())
            await create_datum(db, content, "bench", tag=tag, config=config if tag else None)
        await db.commit()


async def _bench_rows(rows: int, runs: int, cache: bool, workdir: Path, seed: int) -> BenchPoint:
    database = workdir / f"bench-{rows}-{int(cache)}.db"
    database.unlink(missing_ok=True)
    engine = build_engine(f"sqlite+aiosqlite:///{database}")
    try:
        await create_tables(engine)
        sessionmaker = build_sessionmaker(engine)
        await _seed_rows(sessionmaker, rows, seed)
        state = ServerState(
            settings=Settings(QUERY_CACHE=cache),
            ledger=LocalLedgerClient(ConsentLedger(seed=seed)),
            cache=QueryCache(enabled=cache),
        )
        crawler = VisitorClass(VisitorKind.CRAWLER, name=BENCH_CRAWLER)

        async def sample(visitor: VisitorClass) -> list[float]:
            samples = []
            async with sessionmaker() as db:
                await serve_page(db, state, visitor, "html", render_html)
                for _ in range(runs):
                    started = time.perf_counter()
                    await serve_page(db, state, visitor, "html", render_html)
                    samples.append(time.perf_counter() - started)
            return samples

        baseline = await sample(REGULAR)
        with_consent = await sample(crawler)
        return BenchPoint(rows, _mean(baseline), _mean(with_consent), cache=cache)
    finally:
        await engine.dispose()


def bench_server(
    rows=SERVER_ROWS,
    runs: int = MIN_RUNS,
    cache_modes=(False, True),
    workdir: Path | str | None = None,
    seed: int = 1,
) -> BenchReport:
    """Query latency for a regular visitor against a registered crawler, per row count."""
    _check_runs(runs)
    report = BenchReport("server query overhead", runs)
    with tempfile.TemporaryDirectory(prefix="fishnet-bench-") as scratch:
        base = Path(workdir) if workdir is not None else Path(scratch)
        base.mkdir(parents=True, exist_ok=True)
        for count in rows:
            for cache in cache_modes:
                point = asyncio.run(_bench_rows(count, runs, cache, base, seed))
                logger.info(
                    f"server {count} rows cache={'on' if cache else 'off'}: "
                    f"regular {point.baseline * 1000:.3f} ms, crawler {point.with_consent * 1000:.3f} ms"
                )
                report.points.append(point)
    return report
