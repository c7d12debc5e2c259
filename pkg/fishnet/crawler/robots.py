"""
Robots exclusion: the RFC 9309 subset the crawler obeys and the server emits.

Supported directives are ``User-agent``, ``Allow`` and ``Disallow``; paths may
use ``*`` wildcards and a trailing ``$`` anchor. Anything else is ignored.
"""

import logging
import re
from dataclasses import dataclass, field
from functools import lru_cache

logger = logging.getLogger(__name__)

WILDCARD = "*"


@dataclass(frozen=True)
class RobotsRule:
    allow: bool
    path: str

    @property
    def directive(self) -> str:
        return "Allow" if self.allow else "Disallow"


@dataclass
class RobotsGroup:
    agents: list[str] = field(default_factory=list)
    rules: list[RobotsRule] = field(default_factory=list)


@dataclass
class RobotsPolicy:
    groups: list[RobotsGroup] = field(default_factory=list)
    host: str = ""

    def group_for(self, agent: str) -> list[RobotsRule]:
        """Rules of every group naming the agent, else of the wildcard groups."""
        token = agent.lower()
        named = [group for group in self.groups if token in (a.lower() for a in group.agents)]
        if not named:
            named = [group for group in self.groups if WILDCARD in group.agents]
        return [rule for group in named for rule in group.rules]


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_robots(text: str, host: str = "") -> RobotsPolicy:
    policy = RobotsPolicy(host=host)
    current: RobotsGroup | None = None
    last_was_agent = False

    for raw in text.splitlines():
        line = _strip_comment(raw)
        if not line:
            continue
        key, sep, value = line.partition(":")
        if not sep:
            logger.debug(f"Skipping robots line {raw!r}")
            continue
        key = key.strip().lower()
        value = value.strip()

        if key == "user-agent":
            if current is None or not last_was_agent:
                current = RobotsGroup()
                policy.groups.append(current)
            current.agents.append(value)
            last_was_agent = True
            continue

        last_was_agent = False
        if key not in ("allow", "disallow") or current is None:
            continue
        if value and not value.startswith("/") and not value.startswith(WILDCARD):
            continue
        current.rules.append(RobotsRule(allow=key == "allow", path=value))
    return policy


@lru_cache(maxsize=1024)
def _compile(path: str) -> re.Pattern:
    anchored = path.endswith("$")
    body = path[:-1] if anchored else path
    pattern = ".*".join(re.escape(part) for part in body.split(WILDCARD))
    return re.compile(pattern + ("$" if anchored else ""))


def rule_matches(rule: RobotsRule, path: str) -> bool:
    if not rule.path:
        return False
    return _compile(rule.path).match(path) is not None


def is_path_allowed(policy: RobotsPolicy, agent: str, path: str) -> bool:
    if path == "/robots.txt":
        return True
    best: RobotsRule | None = None
    for rule in policy.group_for(agent):
        if not rule_matches(rule, path):
            continue
        if best is None or len(rule.path) > len(best.path):
            best = rule
        elif len(rule.path) == len(best.path) and rule.allow:
            best = rule
    return best is None or best.allow


def render_robots(groups: list[RobotsGroup]) -> str:
    lines: list[str] = []
    for group in groups:
        lines.extend(f"User-agent: {agent}" for agent in group.agents)
        lines.extend(f"{rule.directive}: {rule.path}" for rule in group.rules)
    return "".join(f"{line}\n" for line in lines)
