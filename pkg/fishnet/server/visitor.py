"""
Crawler identification from the user agent, the source address and the
optional signed-timestamp headers.
"""

import ipaddress
import logging
import time
from dataclasses import dataclass
from enum import Enum

from fishnet.core.consent import CrawlerAgentConfig
from fishnet.core.crypto import keccak256, verify_digest

logger = logging.getLogger(__name__)

FRESHNESS_WINDOW = 120


class VisitorKind(str, Enum):
    REGULAR = "regular"
    CRAWLER = "crawler"
    REJECTED = "rejected"


@dataclass(frozen=True)
class VisitorClass:
    kind: VisitorKind
    name: str | None = None
    matched_pattern: str | None = None
    source_ip: str | None = None
    # None when no timestamp signature was presented
    signature_valid: bool | None = None


REGULAR = VisitorClass(VisitorKind.REGULAR)


def _match_agent(user_agent: str, registry: list[CrawlerAgentConfig]) -> CrawlerAgentConfig | None:
    candidates = [agent for agent in registry if agent.user_agent_pattern in user_agent]
    if not candidates:
        return None
    return max(candidates, key=lambda agent: len(agent.user_agent_pattern))


def _ip_allowed(source_ip: str, agent: CrawlerAgentConfig) -> bool:
    try:
        address = ipaddress.ip_address(source_ip)
    except ValueError:
        return False
    return any(address in network for network in agent.networks())


def _timestamp_valid(
    agent: CrawlerAgentConfig, timestamp: str, signature: str, now: float, freshness: int
) -> bool:
    if not (timestamp.isascii() and timestamp.isdigit()):
        return False
    if abs(now - int(timestamp)) > freshness:
        return False
    return verify_digest(agent.public_key, keccak256(timestamp.encode()), signature)


def identify_visitor(
    user_agent: str,
    source_ip: str,
    registry: list[CrawlerAgentConfig],
    timestamp: str | None = None,
    signature: str | None = None,
    now: float | None = None,
    freshness: int = FRESHNESS_WINDOW,
) -> VisitorClass:
    agent = _match_agent(user_agent or "", registry)
    if agent is None:
        return REGULAR

    def rejected(signature_valid: bool | None = None) -> VisitorClass:
        logger.info(f"Rejecting visitor claiming to be {agent.name} from {source_ip}")
        return VisitorClass(
            VisitorKind.REJECTED, agent.name, agent.user_agent_pattern, source_ip, signature_valid
        )

    if not _ip_allowed(source_ip, agent):
        return rejected()

    signature_valid = None
    if timestamp is not None or signature is not None:
        now = time.time() if now is None else now
        signature_valid = bool(timestamp and signature) and _timestamp_valid(
            agent, timestamp, signature, now, freshness
        )
        if not signature_valid:
            return rejected(False)

    return VisitorClass(
        VisitorKind.CRAWLER, agent.name, agent.user_agent_pattern, source_ip, signature_valid
    )
