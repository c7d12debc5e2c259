"""
Consent configuration grammar, the consent decision, and content transforms.

Header grammar: ``name ":" flag *( ";" name ":" flag )`` with flag in {"0", "1"}.
Flag ``1`` allows the named crawler, ``0`` denies it. A missing ``default``
entry means allow.
"""

import ipaddress
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping

from fishnet.core.exceptions import AgentConfigError, ConsentConfigError, UsageError

CONSENT_CONFIG_HEADER = "X-Consent-Config"
TAG_HASH_HEADER = "X-Consent-Tag-Hash"
TAG_SIG_HEADER = "X-Consent-Tag-Sig"
NON_CRAWLABLE_HEADER = "X-Non-Crawlable"
CRAWLER_TIMESTAMP_HEADER = "X-Crawler-Timestamp"
CRAWLER_SIG_HEADER = "X-Crawler-Sig"

TAG_HASH_ATTR = "consent-tag-hash"
TAG_SIG_ATTR = "consent-tag-sig"
MASKED_ATTR = "data-masked"

MASK_PLACEHOLDER = "[content withheld by consent policy]"
DEFAULT_KEY = "default"

_HEX = frozenset("0123456789abcdef")


class Flag(str, Enum):
    ALLOW = "1"
    DENY = "0"


def _check_token(name: str) -> None:
    if not name:
        raise ConsentConfigError("empty crawler name", token=name)
    if any(ch in name for ch in ":;") or any(ch.isspace() for ch in name):
        raise ConsentConfigError(f"invalid crawler name {name!r}", token=name)


@dataclass(frozen=True)
class ConsentConfig:
    rules: Mapping[str, Flag] = field(default_factory=dict)
    default_rule: Flag = Flag.ALLOW

    def __post_init__(self):
        for name in self.rules:
            _check_token(name)
            if name == DEFAULT_KEY:
                raise ConsentConfigError("'default' is reserved", token=name)
        object.__setattr__(self, "rules", dict(self.rules))


def parse_consent_config(text: str) -> ConsentConfig:
    if not text:
        raise ConsentConfigError("empty consent config", token=text)
    rules: dict[str, Flag] = {}
    default_rule: Flag | None = None
    for pair in text.split(";"):
        name, sep, flag = pair.partition(":")
        if not sep:
            raise ConsentConfigError(f"malformed pair {pair!r}", token=pair)
        _check_token(name)
        if flag not in ("0", "1"):
            raise ConsentConfigError(f"flag {flag!r} not in {{0,1}} for {name}", token=flag)
        if name in rules or (name == DEFAULT_KEY and default_rule is not None):
            raise ConsentConfigError(f"duplicate entry {name!r}", token=name)
        if name == DEFAULT_KEY:
            default_rule = Flag(flag)
        else:
            rules[name] = Flag(flag)
    return ConsentConfig(rules, default_rule if default_rule is not None else Flag.ALLOW)


def serialize_consent_config(config: ConsentConfig) -> str:
    pairs = [f"{name}:{config.rules[name].value}" for name in sorted(config.rules)]
    pairs.append(f"{DEFAULT_KEY}:{config.default_rule.value}")
    return ";".join(pairs)


def check_consent(config: ConsentConfig, crawler_name: str) -> Flag:
    return config.rules.get(crawler_name, config.default_rule)


@dataclass(frozen=True)
class ConsentTag:
    hash: str
    signature: str

    def __post_init__(self):
        if len(self.hash) != 64 or not set(self.hash) <= _HEX:
            raise ValueError(f"tag hash must be 64 lowercase hex chars: {self.hash!r}")
        if not self.signature or not set(self.signature) <= _HEX:
            raise ValueError("tag signature must be lowercase hex")


@dataclass(frozen=True)
class TaggedContent:
    content: str
    tag: ConsentTag | None = None
    config: ConsentConfig | None = None
    masked: bool = False

    def attributes(self) -> dict[str, str]:
        """HTML attributes this item serializes with."""
        if self.masked:
            return {MASKED_ATTR: "1"}
        if self.tag is None:
            return {}
        return {TAG_HASH_ATTR: self.tag.hash, TAG_SIG_ATTR: self.tag.signature}


def mask_content(item: TaggedContent) -> TaggedContent:
    return replace(item, content=MASK_PLACEHOLDER, tag=None, config=None, masked=True)


def attach_tag(item: TaggedContent, tag: ConsentTag) -> TaggedContent:
    if item.masked:
        raise UsageError("cannot attach a consent tag to masked content")
    return replace(item, tag=tag)


@dataclass(frozen=True)
class CrawlerAgentConfig:
    name: str
    user_agent_pattern: str
    ip_ranges: tuple[str, ...]
    public_key: str

    def __post_init__(self):
        try:
            _check_token(self.name)
        except ConsentConfigError as exc:
            raise AgentConfigError(str(exc)) from exc
        if not self.user_agent_pattern:
            raise AgentConfigError(f"{self.name}: empty user-agent pattern")
        if not self.ip_ranges:
            raise AgentConfigError(f"{self.name}: at least one IP range is required")
        for cidr in self.ip_ranges:
            try:
                ipaddress.ip_network(cidr, strict=False)
            except ValueError as exc:
                raise AgentConfigError(f"{self.name}: invalid CIDR {cidr!r}") from exc
        object.__setattr__(self, "ip_ranges", tuple(self.ip_ranges))

    def networks(self) -> list[ipaddress.IPv4Network | ipaddress.IPv6Network]:
        return [ipaddress.ip_network(cidr, strict=False) for cidr in self.ip_ranges]
