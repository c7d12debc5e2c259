import logging

from rich.logging import RichHandler


def setup_logging(level: str = "INFO") -> None:
    """Install a rich console handler on the root logger. Entry points call this once."""
    logging.basicConfig(
        level=level.upper(),
        format="%(name)s: %(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=True, show_path=False)],
        force=True,
    )
    # httpx logs every request at INFO
    logging.getLogger("httpx").setLevel(logging.WARNING)
