"""
Polite, identity-bearing crawl of a set of seed URLs.
"""

import logging
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable
from urllib.parse import urljoin, urlparse, urlunparse

import httpx

from fishnet.core.consent import CRAWLER_SIG_HEADER, CRAWLER_TIMESTAMP_HEADER
from fishnet.core.crypto import KeyPair, keccak256, sign_digest
from fishnet.crawler.backoff import MAX_DELAY, MIN_DELAY, HostPacer
from fishnet.crawler.dataset import DatasetRecord
from fishnet.crawler.extract import extract_links, extract_posts
from fishnet.crawler.robots import RobotsPolicy, is_path_allowed, parse_robots

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CrawlerIdentity:
    name: str
    keypair: KeyPair
    user_agent: str = ""

    @property
    def agent_string(self) -> str:
        return self.user_agent or f"Mozilla/5.0 (compatible; {self.name}/1.0)"

    def signed_headers(self, now: float) -> dict[str, str]:
        timestamp = str(int(now))
        signature = sign_digest(self.keypair.private_key, keccak256(timestamp.encode()))
        return {
            "User-Agent": self.agent_string,
            CRAWLER_TIMESTAMP_HEADER: timestamp,
            CRAWLER_SIG_HEADER: signature.hex(),
        }


@dataclass
class CrawlSettings:
    max_pages: int = 100
    min_delay: float = MIN_DELAY
    max_delay: float = MAX_DELAY
    follow_links: bool = True
    timeout: float = 10.0
    clock: Callable[[], float] = time.time
    sleep: Callable[[float], None] = time.sleep


@dataclass
class HostCrawl:
    records: list[DatasetRecord] = field(default_factory=list)
    requested: list[str] = field(default_factory=list)
    pacer: HostPacer | None = None


def _path_of(url: str) -> str:
    parsed = urlparse(url)
    path = parsed.path or "/"
    return f"{path}?{parsed.query}" if parsed.query else path


def _origin(url: str) -> str:
    parsed = urlparse(url)
    return urlunparse((parsed.scheme, parsed.netloc, "", "", "", ""))


class _HostWorker:
    def __init__(self, client: httpx.Client, identity: CrawlerIdentity, settings: CrawlSettings):
        self.client = client
        self.identity = identity
        self.settings = settings
        self.pacer = HostPacer(
            settings.min_delay, settings.max_delay, sleep=settings.sleep
        )
        self.result = HostCrawl(pacer=self.pacer)

    def fetch(self, url: str) -> httpx.Response:
        self.pacer.wait()
        started = time.monotonic()
        status = 599
        try:
            response = self.client.get(
                url,
                headers=self.identity.signed_headers(self.settings.clock()),
                timeout=self.settings.timeout,
                follow_redirects=False,
            )
            status = response.status_code
            return response
        finally:
            self.result.requested.append(_path_of(url))
            self.pacer.record(time.monotonic() - started, status)

    def load_robots(self, origin: str) -> RobotsPolicy:
        url = f"{origin}/robots.txt"
        try:
            response = self.fetch(url)
            location = response.headers.get("location")
            if response.is_redirect and location and _origin(urljoin(url, location)) == origin:
                # one same-host hop, e.g. to a canonical path
                response = self.fetch(urljoin(url, location))
        except httpx.HTTPError as exc:
            logger.warning(f"robots.txt of {origin} unreachable ({exc}); crawling everything")
            return RobotsPolicy(host=origin)
        if response.status_code != 200:
            if response.status_code >= 500:
                logger.warning(f"robots.txt of {origin} returned {response.status_code}; crawling everything")
            return RobotsPolicy(host=origin)
        return parse_robots(response.text, host=origin)

    def follow(self, origin: str, url: str, response: httpx.Response, queue: deque, seen: set[str]) -> None:
        location = response.headers.get("location")
        if not location:
            logger.warning(f"Skipping {url}: redirect without a location")
            return
        target = urljoin(url, location)
        if _origin(target) != origin:
            logger.info(f"Not following {url} off-host to {target}")
            return
        if target not in seen:
            seen.add(target)
            # robots.txt is checked when the target is taken off the queue
            queue.appendleft(target)

    def crawl(self, origin: str, seeds: list[str]) -> HostCrawl:
        policy = self.load_robots(origin)
        queue = deque(seeds)
        seen = set(seeds)
        pages = 0
        while queue and pages < self.settings.max_pages:
            url = queue.popleft()
            if not is_path_allowed(policy, self.identity.name, _path_of(url)):
                logger.debug(f"robots.txt disallows {url}")
                continue
            try:
                response = self.fetch(url)
            except httpx.HTTPError as exc:
                logger.warning(f"Skipping {url}: {exc}")
                continue
            pages += 1
            if response.is_redirect:
                self.follow(origin, url, response, queue, seen)
                continue
            if response.status_code != 200:
                logger.warning(f"Skipping {url}: status {response.status_code}")
                continue
            crawl_time = self.settings.clock()
            for post in extract_posts(response.text):
                self.result.records.append(
                    DatasetRecord(
                        url=url,
                        selector=post.selector,
                        content=post.content,
                        crawl_time=crawl_time,
                        crawler=self.identity.name,
                        consent_tag_hash=post.consent_tag_hash,
                        consent_tag_sig=post.consent_tag_sig,
                        masked=post.masked,
                    )
                )
            if self.settings.follow_links:
                for link in extract_links(response.text, url):
                    if link not in seen:
                        seen.add(link)
                        queue.append(link)
        logger.info(f"{self.identity.name} crawled {pages} pages of {origin}")
        return self.result


def crawl_hosts(
    seeds: list[str],
    identity: CrawlerIdentity,
    settings: CrawlSettings | None = None,
    client: httpx.Client | None = None,
) -> dict[str, HostCrawl]:
    """Crawl every seed host; hosts run side by side, each host strictly in sequence."""
    settings = settings or CrawlSettings()
    by_host: dict[str, list[str]] = {}
    for url in seeds:
        by_host.setdefault(_origin(url), []).append(url)

    owned = client is None
    client = client or httpx.Client()
    try:
        workers = {origin: _HostWorker(client, identity, settings) for origin in by_host}
        with ThreadPoolExecutor(max_workers=max(1, len(workers))) as pool:
            futures = {
                origin: pool.submit(workers[origin].crawl, origin, urls)
                for origin, urls in by_host.items()
            }
            return {origin: future.result() for origin, future in futures.items()}
    finally:
        if owned:
            client.close()


def crawl_site(
    seeds: list[str],
    identity: CrawlerIdentity,
    settings: CrawlSettings | None = None,
    client: httpx.Client | None = None,
) -> list[DatasetRecord]:
    results = crawl_hosts(seeds, identity, settings, client)
    return [record for origin in results for record in results[origin].records]
