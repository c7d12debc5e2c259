from pathlib import Path
from typing import List

import yaml
from pydantic import BaseModel, Field, field_validator

from fishnet.crawler.robots import RobotsGroup, RobotsRule, render_robots


class SiteGroup(BaseModel):
    agents: List[str]
    allow: List[str] = Field(default_factory=list)
    disallow: List[str] = Field(default_factory=list)

    @field_validator("agents")
    @classmethod
    def agents_not_empty(cls, value: List[str]) -> List[str]:
        if not value:
            raise ValueError("a robots group needs at least one agent")
        return value

    @field_validator("allow", "disallow")
    @classmethod
    def paths_rooted(cls, value: List[str]) -> List[str]:
        for path in value:
            if path and not path.startswith("/"):
                raise ValueError(f"robots path must start with '/': {path!r}")
        return value


class SitePolicy(BaseModel):
    groups: List[SiteGroup] = Field(default_factory=list)

    def robots_groups(self) -> list[RobotsGroup]:
        return [
            RobotsGroup(
                agents=list(group.agents),
                rules=[RobotsRule(True, path) for path in group.allow]
                + [RobotsRule(False, path) for path in group.disallow],
            )
            for group in self.groups
        ]


def load_site_policy(path: Path | None) -> SitePolicy:
    if path is None:
        return SitePolicy()
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or []
    if isinstance(data, list):
        data = {"groups": data}
    return SitePolicy.model_validate(data)


def serve_robots(policy: SitePolicy) -> str:
    return render_robots(policy.robots_groups())
