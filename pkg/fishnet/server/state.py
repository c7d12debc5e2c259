import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Hashable

from fishnet.core.config import Settings
from fishnet.core.consent import CrawlerAgentConfig
from fishnet.ledger.client import LedgerClient
from fishnet.server.robots import SitePolicy


@dataclass(frozen=True)
class AccessRecord:
    time: float
    method: str
    path: str
    user_agent: str
    status: int = 0


class QueryCache:
    """Rendered responses keyed by visitor and store version. Disabled unless asked for."""

    def __init__(self, enabled: bool = False):
        self.enabled = enabled
        self._entries: dict[Hashable, Any] = {}
        self._lock = threading.Lock()

    def get(self, key: Hashable) -> Any | None:
        if not self.enabled:
            return None
        with self._lock:
            return self._entries.get(key)

    def put(self, key: Hashable, value: Any) -> None:
        if not self.enabled:
            return
        with self._lock:
            self._entries[key] = value

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()

    def __len__(self) -> int:
        return len(self._entries)


@dataclass
class ServerState:
    settings: Settings
    ledger: LedgerClient
    site_policy: SitePolicy = field(default_factory=SitePolicy)
    registry_version: int = 0
    agents: list[CrawlerAgentConfig] = field(default_factory=list)
    store_version: int = 0
    cache: QueryCache = field(default_factory=QueryCache)
    access_log: deque[AccessRecord] = field(default_factory=lambda: deque(maxlen=100_000))

    def set_registry(self, version: int, agents: list[CrawlerAgentConfig]) -> None:
        if version != self.registry_version:
            self.cache.clear()
        self.registry_version = version
        self.agents = list(agents)

    def store_changed(self) -> None:
        self.store_version += 1
        self.cache.clear()

    def log_access(
        self, method: str, path: str, user_agent: str, status: int = 0, at: float | None = None
    ) -> None:
        at = time.monotonic() if at is None else at
        self.access_log.append(AccessRecord(at, method, path, user_agent, status))
