"""
Forward HTTP proxy that tags data-bearing requests on their way out, so
unmodified HTTP clients can take part in consent tagging.
"""

import logging

import aiohttp
from aiohttp import web

from fishnet.client.agent import OutgoingRequest, TaggingSettings, tag_outgoing_request
from fishnet.client.keystore import Keystore
from fishnet.client.records import RecordStore
from fishnet.core.exceptions import TaggingError

logger = logging.getLogger(__name__)

HOP_BY_HOP = frozenset(
    {
        "connection",
        "keep-alive",
        "proxy-authenticate",
        "proxy-authorization",
        "proxy-connection",
        "te",
        "trailer",
        "transfer-encoding",
        "upgrade",
        "host",
        "content-length",
    }
)

SESSION_KEY = web.AppKey("session", aiohttp.ClientSession)


def _forward_headers(headers) -> dict[str, str]:
    return {key: value for key, value in headers.items() if key.lower() not in HOP_BY_HOP}


def build_proxy_app(keystore: Keystore, store: RecordStore | None = None) -> web.Application:
    store = store or RecordStore(keystore.records_path)

    async def forward(request: web.Request) -> web.StreamResponse:
        body = await request.read()
        outgoing = OutgoingRequest(
            method=request.method,
            url=str(request.url),
            headers=_forward_headers(request.headers),
            body=body,
        )
        try:
            settings = TaggingSettings.from_keystore(keystore)
        except TaggingError:
            settings = None
        try:
            outgoing = tag_outgoing_request(outgoing, settings, store)
        except TaggingError as exc:
            logger.warning(f"Refusing to forward {request.method} {request.url}: {exc}")
            return web.Response(status=502, text=str(exc))

        session = request.app[SESSION_KEY]
        try:
            async with session.request(
                outgoing.method,
                outgoing.url,
                headers=dict(outgoing.headers),
                data=outgoing.body or None,
                allow_redirects=False,
            ) as upstream:
                payload = await upstream.read()
                return web.Response(
                    status=upstream.status,
                    body=payload,
                    headers=_forward_headers(upstream.headers),
                )
        except aiohttp.ClientError as exc:
            logger.warning(f"Upstream {outgoing.url} failed: {exc}")
            return web.Response(status=502, text=str(exc))

    async def session_context(app: web.Application):
        app[SESSION_KEY] = aiohttp.ClientSession(auto_decompress=False)
        yield
        await app[SESSION_KEY].close()

    app = web.Application()
    app.cleanup_ctx.append(session_context)
    app.router.add_route("*", "/{tail:.*}", forward)
    return app


def run_proxy(keystore: Keystore, host: str, port: int) -> None:
    logger.info(f"Consent tagging proxy for {keystore.root} on {host}:{port}")
    web.run_app(build_proxy_app(keystore), host=host, port=port, print=None)
