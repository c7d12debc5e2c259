import logging
from dataclasses import dataclass
from urllib.parse import urldefrag, urljoin, urlparse

from bs4 import BeautifulSoup, Tag

from fishnet.core.consent import MASKED_ATTR, TAG_HASH_ATTR, TAG_SIG_ATTR

logger = logging.getLogger(__name__)

POST_CLASS = "post-body"
_SKIP_ANCESTORS = {"[document]", "html", "body"}


@dataclass(frozen=True)
class ExtractedPost:
    selector: str
    content: str
    consent_tag_hash: str | None = None
    consent_tag_sig: str | None = None
    masked: bool = False


def _describe(element: Tag) -> str:
    classes = element.get("class") or []
    return element.name + "".join(f".{name}" for name in classes)


def selector_path(element: Tag) -> str:
    parts = [_describe(element)]
    for parent in element.parents:
        if parent.name in _SKIP_ANCESTORS:
            break
        parts.append(_describe(parent))
    return " > ".join(reversed(parts))


def extract_posts(html: str) -> list[ExtractedPost]:
    soup = BeautifulSoup(html, "html.parser")
    posts = []
    for element in soup.find_all(class_=POST_CLASS):
        content = element.get_text()
        tag_hash = element.get(TAG_HASH_ATTR)
        tag_sig = element.get(TAG_SIG_ATTR)
        if (tag_hash is None) != (tag_sig is None):
            logger.warning(f"Dropping half a consent tag on {selector_path(element)}")
            tag_hash = tag_sig = None
        masked = tag_hash is None and element.has_attr(MASKED_ATTR)
        posts.append(ExtractedPost(selector_path(element), content, tag_hash, tag_sig, masked))
    return posts


def extract_links(html: str, base_url: str) -> list[str]:
    """Absolute same-host links in document order, fragments removed."""
    host = urlparse(base_url).netloc
    soup = BeautifulSoup(html, "html.parser")
    links = []
    for anchor in soup.find_all("a", href=True):
        url, _ = urldefrag(urljoin(base_url, anchor["href"]))
        parsed = urlparse(url)
        if parsed.scheme in ("http", "https") and parsed.netloc == host and url not in links:
            links.append(url)
    return links
