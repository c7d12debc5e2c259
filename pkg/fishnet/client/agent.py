"""
Client-side consent tagging: hash and sign outgoing data-bearing requests and
keep a local record of every tag handed out.
"""

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Generator, Mapping

import httpx

from fishnet.client.keystore import Keystore
from fishnet.client.records import LocalConsentRecord, RecordStore
from fishnet.core.consent import (
    CONSENT_CONFIG_HEADER,
    NON_CRAWLABLE_HEADER,
    TAG_HASH_HEADER,
    TAG_SIG_HEADER,
    ConsentConfig,
    serialize_consent_config,
)
from fishnet.core.crypto import KeyPair, keccak256, sign_digest
from fishnet.core.exceptions import TaggingError

logger = logging.getLogger(__name__)

TAGGED_METHODS = frozenset({"POST", "PUT", "PATCH"})


@dataclass(frozen=True)
class OutgoingRequest:
    method: str
    url: str
    headers: Mapping[str, str] = field(default_factory=dict)
    body: bytes = b""

    def header(self, name: str) -> str | None:
        lowered = name.lower()
        for key, value in self.headers.items():
            if key.lower() == lowered:
                return value
        return None


@dataclass(frozen=True)
class TaggingSettings:
    keypair: KeyPair
    config: ConsentConfig = field(default_factory=ConsentConfig)

    @classmethod
    def from_keystore(cls, keystore: Keystore) -> "TaggingSettings":
        _, keypair = keystore.active()
        return cls(keypair, keystore.consent_config())


def wants_tag(method: str, headers: Mapping[str, str], body: bytes) -> bool:
    if method.upper() not in TAGGED_METHODS or not body:
        return False
    marker = next((v for k, v in headers.items() if k.lower() == NON_CRAWLABLE_HEADER.lower()), None)
    return marker != "1"


def consent_headers(body: bytes, settings: TaggingSettings) -> dict[str, str]:
    digest = keccak256(body)
    signature = sign_digest(settings.keypair.private_key, digest)
    return {
        TAG_HASH_HEADER: digest.hex,
        TAG_SIG_HEADER: signature.hex(),
        CONSENT_CONFIG_HEADER: serialize_consent_config(settings.config),
    }


def _record(
    store: RecordStore | None,
    headers: Mapping[str, str],
    settings: TaggingSettings,
    url: str,
    method: str,
    clock: Callable[[], float],
) -> None:
    if store is None:
        return
    store.append(
        LocalConsentRecord(
            hash=headers[TAG_HASH_HEADER],
            sig=headers[TAG_SIG_HEADER],
            pubkey=settings.keypair.public_hex,
            consent_config=headers[CONSENT_CONFIG_HEADER],
            url=url,
            method=method.upper(),
            ts=clock(),
        )
    )


def tag_outgoing_request(
    request: OutgoingRequest,
    settings: TaggingSettings | None,
    store: RecordStore | None = None,
    clock: Callable[[], float] = time.time,
) -> OutgoingRequest:
    """
    Returns the very same request object when the request is not tagged
    (method out of scope, empty body or the non-crawlable marker).
    """
    if not wants_tag(request.method, request.headers, request.body):
        return request
    if settings is None:
        raise TaggingError("no usable key pair; the request was not sent")

    added = consent_headers(request.body, settings)
    _record(store, added, settings, request.url, request.method, clock)
    logger.debug(f"Tagged {request.method} {request.url} with {added[TAG_HASH_HEADER]}")
    return replace(request, headers={**request.headers, **added})


class ConsentTagger(httpx.Auth):
    """
    httpx auth flow that tags data-bearing requests, so any httpx client can
    be pointed at a site unchanged::

        httpx.Client(auth=ConsentTagger(settings, store))
    """

    requires_request_body = True

    def __init__(
        self,
        settings: TaggingSettings | None,
        store: RecordStore | None = None,
        clock: Callable[[], float] = time.time,
    ):
        self.settings = settings
        self.store = store
        self.clock = clock

    def auth_flow(self, request: httpx.Request) -> Generator[httpx.Request, httpx.Response, None]:
        body = request.content
        if wants_tag(request.method, request.headers, body):
            if self.settings is None:
                raise TaggingError("no usable key pair; the request was not sent")
            added = consent_headers(body, self.settings)
            request.headers.update(added)
            _record(self.store, added, self.settings, str(request.url), request.method, self.clock)
        yield request
