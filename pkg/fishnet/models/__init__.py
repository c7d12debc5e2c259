from fishnet.models.datum import *  # noqa: F403
from fishnet.models.consent_entry import *  # noqa: F403
from fishnet.models.crawl_event import *  # noqa: F403
from fishnet.models.sync_state import *  # noqa: F403
