import itertools
import uuid

from bs4 import BeautifulSoup

from fishnet.core.consent import (
    MASK_PLACEHOLDER,
    MASKED_ATTR,
    TAG_HASH_ATTR,
    TAG_SIG_ATTR,
    ConsentTag,
    parse_consent_config,
)
from fishnet.core.crypto import keccak256
from fishnet.server.processor import StoredPost, apply_consent
from fishnet.server.render import render_tagged_html
from fishnet.server.visitor import REGULAR, VisitorClass, VisitorKind

GPTBOT = VisitorClass(VisitorKind.CRAWLER, "GPTBot")


def post(content, config=None, non_crawlable=False):
    tag = None
    if config is not None:
        tag = ConsentTag(keccak256(content.encode()).hex, "ab" * 96)
        config = parse_consent_config(config)
    return StoredPost(uuid.uuid4(), content, non_crawlable, tag, config)


def test_rejected_visitor_gets_nothing():
    page = apply_consent([post("a")], VisitorClass(VisitorKind.REJECTED, "GPTBot"))
    assert page.items == [] and page.crawl_events == []


def test_regular_visitor_sees_everything_untagged():
    posts = [post("a", "default:0"), post("b", non_crawlable=True), post("c")]
    page = apply_consent(posts, REGULAR)
    assert [item.content for item in page.items] == ["a", "b", "c"]
    assert all(item.tag is None for item in page.items)
    assert page.crawl_events == []


def test_crawler_view():
    allowed, denied = post("yes", "GPTBot:1"), post("no", "GPTBot:0")
    page = apply_consent([allowed, denied, post("plain"), post("hidden", non_crawlable=True)], GPTBOT)
    assert [item.content for item in page.items] == ["yes", MASK_PLACEHOLDER, "plain"]
    assert page.items[0].tag == allowed.tag
    assert page.crawl_events == [(allowed.data_id, allowed.tag.hash)]


def test_render_attributes_for_every_subset():
    contents = ["one", "two", "three", "four"]
    for mask in itertools.product((True, False), repeat=len(contents)):
        posts = [post(c, "GPTBot:1" if allow else "GPTBot:0") for c, allow in zip(contents, mask)]
        html = render_tagged_html(apply_consent(posts, GPTBOT).items)
        paragraphs = BeautifulSoup(html, "html.parser").select("div.article-contents > p.post-body")
        assert len(paragraphs) == len(contents)
        for paragraph, source, allow in zip(paragraphs, posts, mask):
            if allow:
                assert paragraph.get_text() == source.content
                assert paragraph[TAG_HASH_ATTR] == source.tag.hash
                assert paragraph[TAG_SIG_ATTR] == source.tag.signature
            else:
                assert paragraph.get_text() == MASK_PLACEHOLDER
                assert not paragraph.has_attr(TAG_HASH_ATTR)
                assert paragraph[MASKED_ATTR] == "1"


def test_render_escapes_content():
    html = render_tagged_html(apply_consent([post("<script>x</script>")], REGULAR).items)
    assert "<script>" not in html
    assert "&lt;script&gt;" in html
