from aiohttp import web
from aiohttp import test_utils

from fishnet.client.keystore import Keystore
from fishnet.client.proxy import build_proxy_app
from fishnet.client.records import RecordStore
from fishnet.core.consent import NON_CRAWLABLE_HEADER, TAG_HASH_HEADER, parse_consent_config
from fishnet.core.crypto import keccak256


async def echo(request: web.Request) -> web.Response:
    body = await request.read()
    return web.json_response(
        {"method": request.method, "headers": dict(request.headers), "body": body.decode()}
    )


def upstream_app() -> web.Application:
    app = web.Application()
    app.router.add_route("*", "/{tail:.*}", echo)
    return app


async def start(app: web.Application):
    server = test_utils.TestServer(app)
    client = test_utils.TestClient(server)
    await client.start_server()
    return client


async def test_proxy_tags_submissions(tmp_path):
    keystore = Keystore(tmp_path / "ks")
    keystore.generate(seed="proxy-user")
    keystore.set_consent_config(parse_consent_config("GPTBot:0"))
    upstream = await start(upstream_app())
    proxy = await start(build_proxy_app(keystore))
    target = f"{upstream.server.host}:{upstream.server.port}"
    try:
        response = await proxy.post("/submit", data=b"through the proxy", headers={"Host": target})
        echoed = await response.json()
        assert echoed["headers"][TAG_HASH_HEADER] == keccak256(b"through the proxy").hex
        assert echoed["headers"]["X-Consent-Config"] == "GPTBot:0;default:1"
        assert echoed["body"] == "through the proxy"

        response = await proxy.post(
            "/submit", data=b"private", headers={"Host": target, NON_CRAWLABLE_HEADER: "1"}
        )
        assert TAG_HASH_HEADER not in (await response.json())["headers"]

        response = await proxy.get("/posts", headers={"Host": target})
        assert (await response.json())["method"] == "GET"
    finally:
        await proxy.close()
        await upstream.close()

    records = RecordStore(keystore.records_path).scan().records
    assert [r.hash for r in records] == [keccak256(b"through the proxy").hex]


async def test_proxy_without_key_refuses_data(tmp_path):
    upstream = await start(upstream_app())
    proxy = await start(build_proxy_app(Keystore(tmp_path / "empty")))
    target = f"{upstream.server.host}:{upstream.server.port}"
    try:
        response = await proxy.post("/submit", data=b"data", headers={"Host": target})
        assert response.status == 502
        response = await proxy.get("/posts", headers={"Host": target})
        assert response.status == 200
    finally:
        await proxy.close()
        await upstream.close()
