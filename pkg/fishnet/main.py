import asyncio
import contextlib
import logging
import time
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request

from fishnet.api.ledger.main import ledger_router
from fishnet.api.server.main import server_router
from fishnet.core.config import Settings, settings
from fishnet.core.db import build_engine, build_sessionmaker, create_tables
from fishnet.core.exceptions import LedgerError, LedgerTransportError
from fishnet.ledger.client import HttpLedgerClient, LedgerClient
from fishnet.ledger.state import ConsentLedger
from fishnet.server.robots import load_site_policy
from fishnet.server.state import QueryCache, ServerState
from fishnet.server.sync import LedgerSync

logger = logging.getLogger(__name__)


def create_server_app(
    config: Settings = settings,
    ledger: LedgerClient | None = None,
    run_sync_loop: bool = True,
) -> FastAPI:
    """
    Web server party: data submission, consent-filtered posts, robots.txt and
    the background ledger sync loop.
    """
    engine = build_engine(config.DATABASE_URI)
    sessionmaker = build_sessionmaker(engine)
    state = ServerState(
        settings=config,
        ledger=ledger or HttpLedgerClient(config.LEDGER_URL, timeout=config.LEDGER_TIMEOUT),
        site_policy=load_site_policy(config.ROBOTS_POLICY),
        cache=QueryCache(enabled=config.QUERY_CACHE),
    )
    sync = LedgerSync(state, sessionmaker)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if config.AUTO_CREATE_TABLES:
            await create_tables(engine)
        try:
            await sync.refresh_registry()
        except (LedgerTransportError, LedgerError) as exc:
            logger.warning(f"Starting without a crawler registry: {exc}")
        task = None
        if run_sync_loop and config.SYNC_INTERVAL > 0:
            task = asyncio.create_task(sync.run_forever(config.SYNC_INTERVAL))
        yield
        if task is not None:
            task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await task
        await engine.dispose()

    app = FastAPI(
        title=f"{config.PROJECT_TITLE} server",
        description=f"{config.PROJECT_DESCRIPTION}",
        version=f"{config.PROJECT_VERSION}",
        lifespan=lifespan,
    )
    app.state.engine = engine
    app.state.sessionmaker = sessionmaker
    app.state.server = state
    app.state.sync = sync

    @app.middleware("http")
    async def access_log(request: Request, call_next):
        started = time.monotonic()
        response = await call_next(request)
        state.log_access(
            request.method,
            request.url.path,
            request.headers.get("user-agent", ""),
            response.status_code,
            at=started,
        )
        return response

    app.include_router(server_router)
    return app


def create_ledger_app(ledger: ConsentLedger | None = None, config: Settings = settings) -> FastAPI:
    app = FastAPI(
        title=f"{config.PROJECT_TITLE} ledger",
        description="Consent logger, agent configurations and consent request handler",
        version=f"{config.PROJECT_VERSION}",
    )
    app.state.ledger = ledger or ConsentLedger(seed=config.LEDGER_SEED, latency=config.LEDGER_LATENCY)
    app.include_router(ledger_router)
    return app
