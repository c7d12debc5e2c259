"""
The consent tagging processor: decides, per visitor, what each stored post
looks like on the way out.
"""

from dataclasses import dataclass, field
from uuid import UUID

from fishnet.core.consent import (
    ConsentConfig,
    ConsentTag,
    Flag,
    TaggedContent,
    attach_tag,
    check_consent,
    mask_content,
)
from fishnet.server.visitor import VisitorClass, VisitorKind


@dataclass(frozen=True)
class StoredPost:
    data_id: UUID
    content: str
    non_crawlable: bool = False
    tag: ConsentTag | None = None
    config: ConsentConfig | None = None


@dataclass(frozen=True)
class ServedPage:
    items: list[TaggedContent] = field(default_factory=list)
    # (data_id, tag hash) for every item served with its tag
    crawl_events: list[tuple[UUID, str]] = field(default_factory=list)


def apply_consent(posts: list[StoredPost], visitor: VisitorClass) -> ServedPage:
    if visitor.kind is VisitorKind.REJECTED:
        return ServedPage()
    if visitor.kind is VisitorKind.REGULAR:
        return ServedPage(items=[TaggedContent(post.content) for post in posts])

    items: list[TaggedContent] = []
    events: list[tuple[UUID, str]] = []
    for post in posts:
        if post.non_crawlable:
            continue
        item = TaggedContent(post.content, config=post.config)
        if post.tag is None:
            items.append(TaggedContent(post.content))
        elif check_consent(post.config or ConsentConfig(), visitor.name) is Flag.ALLOW:
            items.append(attach_tag(item, post.tag))
            events.append((post.data_id, post.tag.hash))
        else:
            items.append(mask_content(item))
    return ServedPage(items=items, crawl_events=events)
