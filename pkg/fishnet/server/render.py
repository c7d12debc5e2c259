from jinja2 import Environment, PackageLoader, select_autoescape

from fishnet.core.consent import TaggedContent

_env = Environment(
    loader=PackageLoader("fishnet", "templates"),
    autoescape=select_autoescape(["html"]),
    keep_trailing_newline=True,
)


def render_tagged_html(items: list[TaggedContent], title: str = "posts") -> str:
    return _env.get_template("posts.html").render(items=items, title=title)
